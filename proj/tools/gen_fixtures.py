#!/usr/bin/env python3
# Copyright 2026 The sparsetta Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the JSON fixtures under data/.

Usage: tools/gen_fixtures.py [output_dir]
"""

import json
import math
import pathlib
import random
import sys

PEAK_MACS = 1.0e12
B_DRAM = 2.0e10
B_CACHE = 6.0e10
WIDTH = 4


def write(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def conv(cin, cout, k, h, in_h=None, batch=1):
    hp = {"batch": batch, "in_channels": cin, "out_channels": cout,
          "kernel_h": k, "kernel_w": k, "height": h, "width": h}
    if in_h is not None and in_h != h:
        hp["in_height"] = in_h
        hp["in_width"] = in_h
    return {"kind": "conv2d", "hyperparams": hp}


def bn(c, h, batch=1):
    return {"kind": "batchnorm",
            "hyperparams": {"batch": batch, "out_channels": c, "height": h, "width": h}}


def relu(c, h, batch=1):
    return {"kind": "activation",
            "hyperparams": {"batch": batch, "out_channels": c, "height": h, "width": h}}


def linear(fin, fout, batch=1):
    return {"kind": "linear",
            "hyperparams": {"batch": batch, "in_features": fin, "out_features": fout}}


def global_pool(c, h, batch=1):
    return {"kind": "pooling",
            "hyperparams": {"batch": batch, "out_channels": c, "kernel_h": h,
                            "kernel_w": h, "height": 1, "width": 1}}


def shape_and_costs(layer):
    """Mirror of the library's analytic model, used for offline timings."""
    hp = layer["hyperparams"]
    b = hp.get("batch", 1)
    kind = layer["kind"]
    if kind == "conv2d":
        cin, cout, k = hp["in_channels"], hp["out_channels"], hp["kernel_h"]
        h = hp["height"]
        hin = hp.get("in_height", h)
        mac = b * k * k * cin * cout * h * h
        mem = WIDTH * (k * k * cin * cout + b * cin * hin * hin + b * cout * h * h)
        return cout, cout * h * h, mac, mem
    if kind == "linear":
        fin, fout = hp["in_features"], hp["out_features"]
        return fout, fout, b * fin * fout, WIDTH * (fin * fout + b * fin + b * fout)
    if kind == "batchnorm":
        c, h = hp["out_channels"], hp["height"]
        e = b * c * h * h
        return c, c * h * h, 2 * e, WIDTH * (2 * c + 2 * e)
    if kind == "activation":
        c, h = hp["out_channels"], hp["height"]
        e = b * c * h * h
        return c, c * h * h, e, WIDTH * 2 * e
    if kind == "pooling":
        c, k = hp["out_channels"], hp["kernel_h"]
        out = b * c
        return c, c, out * k * k, WIDTH * (b * c * k * k + out)
    raise ValueError(kind)


def network(name, layers):
    for i, layer in enumerate(layers):
        layer["id"] = i
    ordered = [{"id": l["id"], "kind": l["kind"], "hyperparams": l["hyperparams"]}
               for l in layers]
    return {"name": name, "element_width": WIDTH, "layers": ordered}


def offline_profile(net, total_ms):
    """Roofline forward times scaled so that T_f + T_b + T_re == total_ms.

    Backward is twice the forward time for parameterized layers and equal to
    it otherwise; reforward equals forward.
    """
    raw = []
    for layer in net["layers"]:
        _, _, mac, mem = shape_and_costs(layer)
        t_f = mac / PEAK_MACS + mem / B_CACHE
        params = layer["kind"] not in ("activation", "pooling")
        raw.append((t_f, (2.0 if params else 1.0) * t_f, t_f))
    scale = total_ms / sum(f + b + r for f, b, r in raw)
    return {"layers": [
        {"layer_id": i, "t_f_ms": f * scale, "t_b_off_ms": b * scale,
         "t_re_off_ms": r * scale}
        for i, (f, b, r) in enumerate(raw)]}


def resnet50(batch=1, image=224):
    layers = [conv(3, 64, 7, image // 2, image, batch), bn(64, image // 2, batch)]
    h = image // 4
    cin = 64
    for stage, (blocks, width) in enumerate([(3, 64), (4, 128), (6, 256), (3, 512)]):
        for block in range(blocks):
            stride = 2 if (block == 0 and stage > 0) else 1
            out_h = h // stride
            layers += [conv(cin, width, 1, h, h, batch), bn(width, h, batch),
                       conv(width, width, 3, out_h, h, batch), bn(width, out_h, batch),
                       conv(width, 4 * width, 1, out_h, out_h, batch),
                       bn(4 * width, out_h, batch)]
            if block == 0:
                layers += [conv(cin, 4 * width, 1, out_h, h, batch),
                           bn(4 * width, out_h, batch)]
            cin = 4 * width
            h = out_h
    layers.append(linear(2048, 1000, batch))
    return network("resnet50", layers)


def synth20():
    layers = []
    spec = [(3, 16, 32, 32), (16, 32, 32, 32), (32, 64, 16, 32), (64, 64, 16, 16),
            (64, 128, 8, 16), (128, 128, 8, 8)]
    for cin, cout, h, in_h in spec:
        layers += [conv(cin, cout, 3, h, in_h), bn(cout, h), relu(cout, h)]
    layers += [global_pool(128, 8), linear(128, 10)]
    return network("synth20", layers)


def tiny3():
    return network("tiny3", [conv(4, 8, 3, 8), conv(8, 8, 3, 8), linear(512, 10)])


def stats_lines(net, seed, batch, shifted, offset_sigma):
    """Sampled channel moments; `shifted` layers get a mean offset."""
    rng = random.Random(seed)
    base_rng = random.Random(1000)
    lines = []
    for layer in net["layers"]:
        c, out_elements, _, _ = shape_and_costs(layer)
        n = batch * max(1, out_elements // c)
        means, variances = [], []
        for _ in range(c):
            mu = base_rng.uniform(-1.0, 1.0)
            var = base_rng.uniform(0.5, 2.0)
            if layer["id"] in shifted:
                mu += offset_sigma * math.sqrt(var)
            means.append(mu + rng.gauss(0.0, math.sqrt(var / n)))
            chi = sum(rng.gauss(0.0, 1.0) ** 2 for _ in range(min(n - 1, 64)))
            dof = min(n - 1, 64)
            variances.append(var * chi / dof if dof > 0 else 0.0)
        lines.append(json.dumps({"layer_id": layer["id"], "means": means,
                                 "vars": variances, "samples": n}))
    return "\n".join(lines) + "\n"


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                        pathlib.Path(__file__).resolve().parent.parent / "data")

    write(root / "device.json", {
        "peak_flops": PEAK_MACS, "b_cache": B_CACHE, "b_dram": B_DRAM,
        "dvfs": [{"tem_c": 25.0, "freq_hz": 1.1e9}, {"tem_c": 60.0, "freq_hz": 6.875e8},
                 {"tem_c": 95.0, "freq_hz": 5.5e8}],
        "proc_overhead_k": 1.125, "tem_off": 25.0, "phi_off": 1.0})

    states = {
        "offline": {"n": 0, "tem_c": 25.0, "phi": 1.0},
        "hot": {"n": 0, "tem_c": 60.0, "phi": 1.0},
        "cache_contention": {"n": 0, "tem_c": 25.0, "phi": 0.3},
        "hot_loaded_contention": {"n": 3, "tem_c": 60.0, "phi": 0.3},
    }
    for name, state in states.items():
        write(root / "states" / f"{name}.json", state)

    write(root / "traces" / "static.json",
          [{"t_ms": 0.0, **states["offline"]}, {"t_ms": 1.0e6, **states["offline"]}])
    write(root / "traces" / "load_drift.json", [
        {"t_ms": 0.0, "n": 0, "tem_c": 25.0, "phi": 1.0},
        {"t_ms": 400.0, "n": 1, "tem_c": 40.0, "phi": 0.9},
        {"t_ms": 900.0, "n": 2, "tem_c": 60.0, "phi": 0.7},
        {"t_ms": 1500.0, "n": 1, "tem_c": 60.0, "phi": 0.8},
        {"t_ms": 2200.0, "n": 0, "tem_c": 40.0, "phi": 1.0},
        {"t_ms": 1.0e6, "n": 0, "tem_c": 40.0, "phi": 1.0}])
    write(root / "traces" / "short.json",
          [{"t_ms": 0.0, **states["offline"]}, {"t_ms": 50.0, **states["offline"]}])

    tiny = tiny3()
    write(root / "tiny3" / "network.json", tiny)
    write(root / "tiny3" / "profile.json", {"layers": [
        {"layer_id": i, "has_params": True, "t_f_ms": 1.0, "t_b_ms": 2.0,
         "t_dw_ms": 1.0, "t_dx_ms": 1.0, "t_re_ms": 1.0} for i in range(3)]})
    write(root / "tiny3" / "importance.json", {"a": [5.0, 1.0, 4.0]})

    s20 = synth20()
    write(root / "synth20" / "network.json", s20)
    write(root / "synth20" / "offline.json", offline_profile(s20, 12.0))
    (root / "synth20" / "stats_history.jsonl").write_text(
        stats_lines(s20, 11, 16, set(), 0.0))
    (root / "synth20" / "stats_current.jsonl").write_text(
        stats_lines(s20, 12, 16, {3, 7}, 2.0))

    r50 = resnet50()
    write(root / "resnet50" / "network.json", r50)
    write(root / "resnet50" / "offline.json", offline_profile(r50, 45.8))

    common = {"device": "../device.json", "seed": 0, "alpha": 0.1,
              "adaptation_gain": 0.5, "kl_mode": "gaussian", "jitter": 0.0,
              "noise_floor_factor": 4.0, "full_update_replay": True}
    write(root / "scenarios" / "drift.json", {
        "network": "../resnet50/network.json",
        "offline_profile": "../resnet50/offline.json",
        "state_trace": "../traces/load_drift.json",
        "mode": "sequential", "batches": 40, "arrival_interval_ms": 60.0,
        **common,
        "scheduler": {"sigma": 0.33, "resolution": 500},
        "environment": {
            "seed": 42, "batch_size": 16,
            "mean_range": [-1.0, 1.0], "var_range": [0.5, 2.0],
            "shifts": [
                {"batch_index": 5, "layers": [106, 104, 102], "mean_offset_sigma": 2.0,
                 "var_scale": 1.5},
                {"batch_index": 15, "layers": [100, 98, 96, 94], "mean_offset_sigma": 1.5,
                 "var_scale": 1.0},
                {"batch_index": 25, "layers": [106, 92, 90, 60],
                 "mean_offset_sigma": 1.0, "var_scale": 1.25},
            ]}})
    write(root / "scenarios" / "zero_shift.json", {
        "network": "../synth20/network.json",
        "offline_profile": "../synth20/offline.json",
        "state_trace": "../traces/static.json",
        "mode": "sequential", "batches": 30, **common,
        "scheduler": {"sigma": 0.33, "resolution": 500},
        "environment": {"seed": 5, "batch_size": 16, "shifts": []}})
    write(root / "scenarios" / "single_shift.json", {
        "network": "../synth20/network.json",
        "offline_profile": "../synth20/offline.json",
        "state_trace": "../traces/static.json",
        "mode": "sequential", "batches": 30, "arrival_interval_ms": 20.0, **common,
        "scheduler": {"sigma": 0.33, "resolution": 500},
        "environment": {"seed": 5, "batch_size": 16, "shifts": [
            {"batch_index": 10, "layers": [16], "mean_offset_sigma": 2.0,
             "var_scale": 1.0}]}})
    write(root / "scenarios" / "parallel.json", {
        "network": "../synth20/network.json",
        "offline_profile": "../synth20/offline.json",
        "state_trace": "../traces/static.json",
        "mode": "parallel", "batches": 30, "arrival_interval_ms": 2.0, **common,
        "scheduler": {"sigma": 0.5, "resolution": 500},
        "environment": {"seed": 9, "batch_size": 16, "shifts": [
            {"batch_index": 8, "layers": [13, 16], "mean_offset_sigma": 2.0,
             "var_scale": 1.0}]}})


if __name__ == "__main__":
    main()
