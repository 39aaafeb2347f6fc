#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright The memcoex Authors
"""Writes resnet50.json: ResNet-50 (stride on the 3x3 conv), int8 weights and activations."""
import json
import sys

nodes, edges = [], []


def add(kind, src, out_ch, hw, kernel=1, stride=1, in_ch=None, weights=0):
    nid = len(nodes)
    nodes.append({"id": nid, "kind": kind, "kernel": [kernel, kernel], "stride": [stride, stride],
                  "in_ch": in_ch if in_ch is not None else out_ch, "out_ch": out_ch,
                  "out_hw": [hw, hw], "weight_bytes": weights})
    for s in src:
        edges.append([s, nid])
    return nid


def conv(src, cin, cout, hw, k, s):
    return add("conv", [src], cout, hw, k, s, cin, k * k * cin * cout)


x = add("input", [], 3, 224)
x = conv(x, 3, 64, 112, 7, 2)
x = add("pool", [x], 64, 56, 3, 2)
cin, hw = 64, 56
for width, blocks, stride in ((64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)):
    for b in range(blocks):
        s = stride if b == 0 else 1
        out_hw = hw // s
        a = conv(x, cin, width, hw, 1, 1)
        a = conv(a, width, width, out_hw, 3, s)
        a = conv(a, width, 4 * width, out_hw, 1, 1)
        short = conv(x, cin, 4 * width, out_hw, 1, s) if b == 0 else x
        x = add("eltwise", [a, short], 4 * width, out_hw)
        cin, hw = 4 * width, out_hw
x = add("pool", [x], cin, 1, 7, 7)
x = conv(x, cin, 1000, 1, 1, 1)

doc = {"nodes": nodes, "edges": edges, "inputs": [0], "outputs": [x]}
out = sys.argv[1] if len(sys.argv) > 1 else "resnet50.json"
with open(out, "w") as f:
    json.dump(doc, f, indent=1)
    f.write("\n")
