"""External solver adapter: ``python -m respan.lp.highs_cli model.mps out.sol``.

Reads the MPS file with HiGHS' own parser, solves it and writes a
``name value`` listing preceded by ``# status`` and ``# objective`` lines.
"""

from __future__ import annotations

import sys


def main(argv: list[str] | None = None) -> int:
    import highspy

    from .solvers import highs_status, thread_cap

    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m respan.lp.highs_cli MODEL.mps OUT.sol", file=sys.stderr)
        return 2
    mps_path, sol_path = argv
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    threads = thread_cap()
    if threads:
        h.setOptionValue("threads", threads)
    if h.readModel(mps_path) == highspy.HighsStatus.kError:
        print(f"cannot read {mps_path}", file=sys.stderr)
        return 1
    h.run()
    status = highs_status(h.getModelStatus())
    lp = h.getLp()
    with open(sol_path, "w", encoding="utf-8") as fh:
        fh.write(f"# status {status.value}\n")
        if status.value == "Optimal":
            fh.write(f"# objective {h.getInfo().objective_function_value!r}\n")
            for name, val in zip(lp.col_names_, h.getSolution().col_value):
                fh.write(f"{name} {float(val)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
