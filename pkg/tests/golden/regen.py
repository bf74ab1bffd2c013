"""Regenerate the frozen encodings.  Only run after reviewing an intended format change:

    python3 tests/golden/regen.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import support  # noqa: E402
from vgoalmc.encoders import encode_prism, encode_smv  # noqa: E402

CTL_PROPS = ["AG safety", "EG (non-errors -> EF liveness)"]
PCTL_PROPS = ["P>=1 [G safety]", "P>0 [non-errors U (non-errors & liveness)]", "P=? [F liveness]"]
MODELS = ["warehouse_g1", "mini_cancel"]


def main():
    for name in MODELS:
        (support.GOLDEN / f"{name}.smv").write_text(encode_smv(support.ts(name), CTL_PROPS))
        model, props = encode_prism(support.dtmc(name), PCTL_PROPS)
        (support.GOLDEN / f"{name}.pm").write_text(model)
        (support.GOLDEN / f"{name}.props").write_text(props)


if __name__ == "__main__":
    main()
