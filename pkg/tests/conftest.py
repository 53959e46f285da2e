import sys
from pathlib import Path

# make sibling test helpers (vfdt_reference) importable regardless of cwd
sys.path.insert(0, str(Path(__file__).parent))


def strip_elapsed(csv_text: str) -> str:
    """Drop the elapsed_ns column (the only nondeterministic field) from a
    records CSV."""
    lines = []
    for line in csv_text.splitlines():
        if line:
            lines.append(line.rsplit(",", 1)[0])
    return "\n".join(lines) + "\n"
