import csv
import sys
from pathlib import Path


def write_rows(rows: list[dict], path: str | None) -> None:
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if path:
            out.close()
            print(f"wrote {len(rows)} rows to {Path(path).resolve()}", file=sys.stderr)
