#!/usr/bin/env python3
"""Mock taint analysis tool emitting the flow-tuples raw format.

Same discovery logic as flow_tool.py, different output syntax, and it
reports methods by bare name rather than full signature.  Used to check
that distinct raw formats converge on identical answers.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from flow_tool import SINKS, SOURCES, load_app  # noqa: E402


def method_name(signature):
    head = signature.split("(", 1)[0].strip()
    return head.split()[-1] if head else signature


def main(argv):
    out_path = None
    apps = []
    it = iter(argv)
    for arg in it:
        if arg == "--out":
            out_path = next(it)
        elif arg == "--memory":
            next(it)
        else:
            apps.append(arg)

    log = os.environ.get("TOOL_LAUNCH_LOG")
    if log:
        with open(log, "a", encoding="utf-8") as fh:
            fh.write("tuple_tool " + " ".join(apps) + "\n")

    lines = ["% flow-tuples report"]
    for path in apps:
        app_file, statements = load_app(path)
        sources = [s for s in statements if s["callee"] in SOURCES]
        sinks = [s for s in statements if s["callee"] in SINKS]
        for sink in sinks:
            for source in sources:
                lines.append(
                    "flow((%s; %s; %s; %s), (%s; %s; %s; %s))"
                    % (source["text"], method_name(source["method"]),
                       source["classname"], app_file,
                       sink["text"], method_name(sink["method"]),
                       sink["classname"], app_file))
    report = "\n".join(lines) + "\n"

    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
