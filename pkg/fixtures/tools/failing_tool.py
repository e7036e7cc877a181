#!/usr/bin/env python3
"""Mock tool that crashes on startup."""

import os
import sys

log = os.environ.get("TOOL_LAUNCH_LOG")
if log:
    with open(log, "a", encoding="utf-8") as fh:
        fh.write("failing_tool " + " ".join(sys.argv[1:]) + "\n")

sys.stderr.write("FATAL: soot.SootResolver could not resolve "
                 "android.telephony.TelephonyManager\n")
sys.exit(3)
