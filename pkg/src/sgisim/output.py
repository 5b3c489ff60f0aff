"""CSV and JSON emission with the resolved configuration embedded."""

import csv
import datetime
import io
import json
import math

from . import __version__

SCHEMA_VERSION = 1


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def header(columns):
    return [f"{n} [{u}]" if u else n for n, u in columns]


def write_csv(fh, table, meta):
    """Comment lines (timestamp first), then an RFC 4180 table.

    Only the ``# generated`` line varies between identical runs.
    """
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    nl = "\r\n"
    fh.write(f"# generated: {stamp}{nl}")
    fh.write(f"# sgisim {__version__} schema {SCHEMA_VERSION}{nl}")
    for k in sorted(meta):
        if k != "config":
            fh.write(f"# {k}: {json.dumps(meta[k], sort_keys=True)}{nl}")
    fh.write(f"# config: {json.dumps(meta.get('config', {}), sort_keys=True)}{nl}")
    w = csv.writer(fh, lineterminator=nl)
    w.writerow(header(table.columns))
    for row in table.rows:
        w.writerow([_cell(v) for v in row])


def table_json(table, meta):
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        **{k: meta[k] for k in sorted(meta)},
        "columns": [{"name": n, "unit": u} for n, u in table.columns],
        "rows": [[_json_value(v) for v in r] for r in table.rows],
    }


def summary_json(summary, meta):
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        **{k: meta[k] for k in sorted(meta)},
        "summary": {k: _json_value(v) for k, v in summary.items()},
    }


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def to_csv_string(table, meta):
    buf = io.StringIO(newline="")
    write_csv(buf, table, meta)
    return buf.getvalue()
