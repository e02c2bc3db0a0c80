#!/usr/bin/env python
import os
import sys

SCRIPTS = sorted(
    name[:-len(".py")] for name in os.listdir(os.path.join(os.path.dirname(os.path.abspath(__file__)), "scripts"))
    if name.endswith(".py") and not name.startswith("__")
)


def print_scripts():
    print("These are your available experiment scripts:")
    for name in SCRIPTS:
        print(f"\t{name}")


if len(sys.argv) == 1:
    print_scripts()
    exit()

script = sys.argv[1]

if script not in SCRIPTS:
    print(f"'{script}' is not an available option")
    print()
    print_scripts()
    exit(1)

__import__(f"scripts.{script}")
