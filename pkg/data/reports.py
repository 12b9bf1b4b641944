"""
Experiment report rows, run manifests, and their JSON-lines / CSV writers
"""
import csv
import json
import platform
from datetime import datetime, timezone
from typing import Any, Dict, List, NamedTuple

import numpy as np
import scipy

from settings import __version__

CSV_COLUMNS = ['n', 'm', 'lower_bound', 'upper_estimate', 'gap', 'seed', 'wall_time_ms', 'label']
CSV_COMMENT = '# '


class ExperimentRow(NamedTuple):
    n: int
    m: int
    lower_bound: float
    upper_estimate: float
    gap: float
    seed: int
    wall_time_ms: float
    label: str = ''
    extras: Dict[str, Any] = {}


class RunManifest(NamedTuple):
    command: str
    argv: List[str]
    seed: int
    versions: str
    started_at: str
    finished_at: str = ''
    config: Dict[str, Any] = {}

    def finish(self):
        return self._replace(finished_at=_now())


def _now():
    return datetime.now(timezone.utc).isoformat()


def versions():
    return 'nildist %s; python %s; numpy %s; scipy %s' % (
        __version__, platform.python_version(), np.__version__, scipy.__version__)


def start_manifest(command, argv, seed=0, config=None):
    return RunManifest(command, list(argv), int(seed), versions(), _now(), '', dict(config or {}))


def row_to_json(row):
    return row._asdict()


def row_from_json(obj):
    values = dict(obj)
    values['extras'] = dict(values.get('extras') or {})
    return ExperimentRow(**values)


def manifest_to_json(manifest):
    return manifest._asdict()


def _manifest_record(manifest, summary):
    record = {'manifest': manifest_to_json(manifest)}
    if summary:
        record['summary'] = summary
    return record


def write_json_lines(rows, stream, manifest=None, summary=None):
    """
    One JSON object per row, then a closing line with the manifest (and summary) if given
    """
    for row in rows:
        stream.write(json.dumps(row_to_json(row)) + '\n')
    if manifest is not None:
        stream.write(json.dumps(_manifest_record(manifest, summary)) + '\n')
    stream.flush()


def write_csv(rows, stream, manifest=None, summary=None, columns=None):
    """
    Header and one line per row; the manifest (and summary) lead as a '# '-prefixed JSON comment line
    :param columns: row fields to write, default CSV_COLUMNS
    """
    columns = CSV_COLUMNS if columns is None else list(columns)
    if manifest is not None:
        stream.write(CSV_COMMENT + json.dumps(_manifest_record(manifest, summary)) + '\n')
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in (getattr(row, c) for c in columns)])
    stream.flush()


def write_rows(rows, stream, output_format='json', manifest=None, summary=None):
    if output_format == 'json':
        write_json_lines(rows, stream, manifest, summary)
    elif output_format == 'csv':
        write_csv(rows, stream, manifest, summary)
    else:
        raise ValueError('unknown output format %r (use json or csv)' % (output_format,))
