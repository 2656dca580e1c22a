#!/usr/bin/env python3
"""Regenerates testdata/rle_golden.json.

Independent transcription of the compressed RLE string format used for
interchange (5 data bits per char, continuation flag in bit 5, chars 48..111,
deltas against the count two positions back from the third count on). The C++
codec is tested against these frozen values, so keep this file free of any
dependency on the C++ implementation.
"""

import json
import random
import sys


def compress(counts):
    out = []
    for i, c in enumerate(counts):
        x = c - counts[i - 2] if i > 2 else c
        more = True
        while more:
            chunk = x & 0x1F
            x >>= 5
            more = (x != -1) if (chunk & 0x10) else (x != 0)
            if more:
                chunk |= 0x20
            out.append(chr(chunk + 48))
    return "".join(out)


def decompress(text):
    counts = []
    p = 0
    while p < len(text):
        x = 0
        k = 0
        more = True
        while more:
            c = ord(text[p]) - 48
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def random_counts(rng, h, w):
    total = h * w
    counts = []
    remaining = total
    zero_run = True
    while remaining > 0:
        run = rng.randint(0 if zero_run and not counts else 1, remaining)
        counts.append(run)
        remaining -= run
        zero_run = False
    if len(counts) % 2 == 0 and counts[-1] == 0:
        counts.pop()
    return counts


def canonical(counts):
    runs = []
    for i, c in enumerate(counts):
        bit = i % 2 == 1
        if c == 0:
            continue
        if runs and runs[-1][0] == bit:
            runs[-1][1] += c
        else:
            runs.append([bit, c])
    out = []
    expect = False
    for bit, length in runs:
        if bit != expect:
            out.append(0)
            expect = bit
        out.append(length)
        expect = not expect
    return out


def main():
    rng = random.Random(20260814)
    cases = []

    fixed = [
        (4, 4, [16]),
        (4, 4, [0, 4, 12]),
        (1, 1, [0, 1]),
        (4, 4, [0, 16]),
        (10, 10, [3, 7, 40, 2, 48]),
        (3, 5, [0, 3, 2, 1, 9]),
    ]
    for h, w, counts in fixed:
        cases.append((h, w, canonical(counts)))

    for _ in range(24):
        h = rng.randint(1, 64)
        w = rng.randint(1, 64)
        cases.append((h, w, canonical(random_counts(rng, h, w))))

    entries = []
    for h, w, counts in cases:
        text = compress(counts)
        back = decompress(text)
        assert back == counts, (counts, text, back)
        assert sum(counts) == h * w
        entries.append({"height": h, "width": w, "counts": counts,
                        "compressed": text})

    json.dump({"cases": entries}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
