"""Run the acceptance checks and write the JSON report (same as ``cftransfer suite``)."""

import sys

from cftransfer.cli import main

if __name__ == "__main__":
    sys.exit(main(["suite", "--all", *sys.argv[1:]]))
