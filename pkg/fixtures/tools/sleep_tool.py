#!/usr/bin/env python3
"""Mock tool that sleeps forever.  Exists to trip the dispatcher's
timeout handling; SLEEP_TOOL_SECONDS caps the nap for safety."""

import os
import sys
import time

log = os.environ.get("TOOL_LAUNCH_LOG")
if log:
    with open(log, "a", encoding="utf-8") as fh:
        fh.write("sleep_tool " + " ".join(sys.argv[1:]) + "\n")

sys.stdout.write("<results>\n")
sys.stdout.flush()
time.sleep(float(os.environ.get("SLEEP_TOOL_SECONDS", "600")))
sys.stdout.write("</results>\n")
