#!/usr/bin/env python3
"""Mock tool whose output no converter understands."""

import os
import sys

log = os.environ.get("TOOL_LAUNCH_LOG")
if log:
    with open(log, "a", encoding="utf-8") as fh:
        fh.write("garbage_tool " + " ".join(sys.argv[1:]) + "\n")

sys.stdout.write("Exception in thread main: see log for details\n<<<\n")
