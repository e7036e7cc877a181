#!/usr/bin/env python3
"""Mock taint analysis tool emitting the sink-xml raw format.

Reads app sidecars (XML or JSON) named on the command line, pairs every
statement calling a known source with every statement calling a known
sink inside the same app, and prints the result.  Honors:

  --out PATH   write the report there instead of stdout
  --memory N   accepted and ignored, mirrors real tool wrappers

Environment:
  TOOL_LAUNCH_LOG   append one line per invocation (for tests that
                    count how often the tool actually ran)
  FLOW_TOOL_SLEEP   float seconds to sleep before answering
"""

import json
import os
import sys
import time
import xml.etree.ElementTree as ET
from xml.sax.saxutils import quoteattr

SOURCES = {"getDeviceId", "getLastKnownLocation", "getLatitude",
           "getLongitude", "getStringExtra"}
SINKS = {"sendTextMessage", "publish"}


def load_app(path):
    data = open(path, "rb").read()
    statements = []
    if data.lstrip()[:1] == b"<":
        root = ET.fromstring(data)
        app_file = root.get("file")
        for cls in root.iter("class"):
            for method in cls.iter("method"):
                for stmt in method.iter("statement"):
                    statements.append({
                        "classname": cls.get("name"),
                        "method": method.get("signature"),
                        "callee": stmt.get("callee") or "",
                        "text": " ".join((stmt.findtext("text") or "")
                                         .split()),
                    })
    else:
        doc = json.loads(data)
        app_file = doc["file"]
        for cls in doc.get("classes", []):
            for method in cls.get("methods", []):
                for stmt in method.get("statements", []):
                    statements.append({
                        "classname": cls["name"],
                        "method": method["signature"],
                        "callee": stmt.get("callee") or "",
                        "text": " ".join(stmt["text"].split()),
                    })
    return app_file, statements


def main(argv):
    out_path = None
    memory = None
    apps = []
    it = iter(argv)
    for arg in it:
        if arg == "--out":
            out_path = next(it)
        elif arg == "--memory":
            memory = next(it)
        else:
            apps.append(arg)

    log = os.environ.get("TOOL_LAUNCH_LOG")
    if log:
        with open(log, "a", encoding="utf-8") as fh:
            fh.write("flow_tool " + " ".join(apps) + "\n")

    sleep = os.environ.get("FLOW_TOOL_SLEEP")
    if sleep:
        time.sleep(float(sleep))

    lines = ["<results>"]
    for path in apps:
        app_file, statements = load_app(path)
        sources = [s for s in statements if s["callee"] in SOURCES]
        sinks = [s for s in statements if s["callee"] in SINKS]
        for sink in sinks:
            for source in sources:
                lines.append(
                    "  <sink statement=%s method=%s classname=%s app=%s>"
                    % (quoteattr(sink["text"]), quoteattr(sink["method"]),
                       quoteattr(sink["classname"]), quoteattr(app_file)))
                lines.append(
                    "    <source statement=%s method=%s classname=%s "
                    "app=%s/>"
                    % (quoteattr(source["text"]),
                       quoteattr(source["method"]),
                       quoteattr(source["classname"]), quoteattr(app_file)))
                lines.append("  </sink>")
    lines.append("</results>")
    report = "\n".join(lines) + "\n"

    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
