"""Stand-in for the ``highs`` executable built on highspy.

Accepts the subset of the command-line interface the command backend uses
and writes a style-0 solution file.
"""
import argparse
import sys

import highspy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model_file", required=True)
    ap.add_argument("--solution_file", required=True)
    ap.add_argument("--options_file")
    args = ap.parse_args()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(args.model_file) != highspy.HighsStatus.kOk:
        print("cannot read model", file=sys.stderr)
        return 1
    if args.options_file:
        h.readOptions(args.options_file)
        h.setOptionValue("output_flag", False)
    h.run()
    h.writeSolution(args.solution_file, 0)
    info = h.getInfo()
    print(f"Model status      : {h.modelStatusToString(h.getModelStatus())}")
    if h.getLp().integrality_:
        print(f"Dual bound        {info.mip_dual_bound!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
