#!/usr/bin/env python3
"""Mock tool that always reports zero flows."""

import os
import sys

log = os.environ.get("TOOL_LAUNCH_LOG")
if log:
    with open(log, "a", encoding="utf-8") as fh:
        fh.write("empty_tool " + " ".join(sys.argv[1:]) + "\n")

out_path = None
args = sys.argv[1:]
if "--out" in args:
    out_path = args[args.index("--out") + 1]

report = "<results/>\n"
if out_path:
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(report)
else:
    sys.stdout.write(report)
