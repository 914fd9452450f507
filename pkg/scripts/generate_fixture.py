#!/usr/bin/env python3
"""Regenerate the bundled synthetic LIBSVM fixture (tests/data/synthetic.libsvm).

2000 samples, 22 features, deterministic. Values are written at %.6g so the
file stays small; tests that need exact round-trips serialize their own data.
"""

import os

from pskip.problems import synthetic_blobs

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                   "synthetic.libsvm")


def main():
    ds = synthetic_blobs(2000, 22, seed=20240811)
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as fh:
        for (idx, val), lab in zip(ds.rows, ds.labels):
            toks = ["1" if lab > 0 else "-1"]
            toks.extend(f"{i + 1}:{v:.6g}" for i, v in zip(idx, val))
            fh.write(" ".join(toks) + "\n")
    print(f"wrote {OUT} ({len(ds)} rows, d={ds.d})")


if __name__ == "__main__":
    main()
