"""Regenerate the pinned RNG test vectors from the scalar oracle.

Run from the repository root:  python3 scripts/gen_rng_vectors.py
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from erwlab.rng import word_scalar  # noqa: E402

CASES = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 0, 2),
    (0, 1, 0),
    (0, 1, 1),
    (1, 0, 0),
    (0, 0, 10**6),
    (12345, 678, 90123),
    (2**63, 2**40 | 7, 2**32),
    (0xDEADBEEF, (3 << 40) | 42, 999_999_999),
]


def main():
    out = []
    for seed, stream, counter in CASES:
        out.append(
            {
                "seed": seed,
                "stream_id": stream,
                "counter": counter,
                "word": f"{word_scalar(seed, stream, counter):016x}",
            }
        )
    path = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "rng_vectors.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {len(out)} vectors to {path}")


if __name__ == "__main__":
    main()
