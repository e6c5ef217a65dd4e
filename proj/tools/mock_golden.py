#!/usr/bin/env python3
"""Writes tests/fixtures/mock_golden.json straight from the mock backend's
documented hash rule, without going through the C++ implementation."""

import json
import struct
import sys

M64 = (1 << 64) - 1
US, RS = "\x1f", "\x1e"


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & M64
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & M64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    def uniform01(self) -> float:
        return (self.next() >> 11) * 2.0**-53


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def expand(key: str, seed: int, dim: int):
    g = SplitMix64(fnv1a64(key.encode()) ^ seed)
    return [f32(g.uniform01() * 2.0 - 1.0) for _ in range(dim)]


def g9(x: float) -> str:
    return "%.9g" % x


def side(inp):
    return "t:" + inp["text"] if "text" in inp else "v:" + inp["locator"]


def main(out_path: str):
    dim = 64
    cases = []
    for seed in (0, 42):
        for text, tmpl, layer in (("hello world", "text_eol", 27), ("", "text_eol", 0), ("a dog runs", "text_eol", 5)):
            key = US.join(["text", tmpl, str(layer), text])
            cases.append({"kind": "text", "seed": seed, "text": text, "template_id": tmpl, "layer": layer,
                          "embedding": [g9(v) for v in expand(key, seed, dim)]})
        for loc, fps, mf, tmpl, layer in (("dog", 2.0, 180, "video_eol", 3), ("clips/x.mp4", 1.5, 8, "video_eol_prefixed", 27)):
            key = US.join(["video", tmpl, str(layer), loc, g9(fps), str(mf)])
            cases.append({"kind": "video", "seed": seed, "locator": loc, "fps": fps, "max_frames": mf,
                          "template_id": tmpl, "layer": layer,
                          "embedding": [g9(v) for v in expand(key, seed, dim)]})
        for q, c in (({"text": "a dog runs"}, {"locator": "dog"}), ({"locator": "dog"}, {"text": "a dog runs"}),
                     ({"text": "x"}, {"text": "y"})):
            g = SplitMix64(fnv1a64(("score" + US + side(q) + RS + side(c)).encode()) ^ seed)
            cases.append({"kind": "score", "seed": seed, "query": q, "candidate": c, "p_yes": "%.17g" % g.uniform01()})
    with open(out_path, "w") as f:
        json.dump({"dim": dim, "num_layers": 28, "cases": cases}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/mock_golden.json")
