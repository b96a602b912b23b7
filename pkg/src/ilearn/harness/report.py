"""Writers and readers for experiment reports.

Three formats are supported:

    csv   long format, header "increment,class,accuracy"; each increment has
          one row per class ("-" for untrained classes) followed by a "gen"
          and a "std" row
    json  the full RunReport, including per-repetition results
    text  an accuracy table in percent, one row per increment and one column
          per class plus Gen. and Std.
"""

from ilearn.harness.experiment import RunReport

import csv
import io
import json
import logging

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "text")
CSV_HEADER = ("increment", "class", "accuracy")
ABSENT = "-"

#=============================================================================

def _cell(value):
    return ABSENT if value is None else repr(float(value))

#-----------------------------------------------------------------------------

def format_csv(report):
    """Returns the long-format CSV text of a report."""

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for name, row, gen, std in zip(report.increment_names, report.per_class,
                                   report.gen, report.std):
        for c, value in zip(report.classes, row):
            writer.writerow((name, c, _cell(value)))
        writer.writerow((name, "gen", _cell(gen)))
        writer.writerow((name, "std", _cell(std)))
    return out.getvalue()

#-----------------------------------------------------------------------------

def format_json(report, with_timing=False):
    """Returns the JSON text of a report."""

    return json.dumps(report.to_dict(with_timing=with_timing), indent=2) \
        + "\n"

#-----------------------------------------------------------------------------

def _percent(value):
    return ABSENT if value is None else f"{100*value:.1f}"

def format_text(report):
    """Returns the report as an aligned accuracy table in percent."""

    header = ["Set"] + [str(c) for c in report.classes] + ["Gen.", "Std."]
    rows = [[name] + [_percent(v) for v in row] + [_percent(g), _percent(s)]
            for name, row, g, s in zip(report.increment_names,
                                       report.per_class, report.gen,
                                       report.std)]
    widths = [max(len(r[k]) for r in [header] + rows)
              for k in range(len(header))]

    def line(cells):
        return "  ".join(cell.rjust(w) for cell, w in zip(cells, widths))

    lines = [f"{report.method} on {report.dataset} "
             f"({len(report.runs)} repetitions)"]
    lines.append(line(header))
    lines.extend(line(r) for r in rows)
    if report.timing is not None:
        lines.append(f"time: {report.timing['total']:.1f}s")
    return "\n".join(lines) + "\n"

#=============================================================================

def report_emit(report, fmt="text", path=None, with_timing=False):
    """Renders a report and optionally writes it to a file.

    Positional arguments:
    report -- RunReport

    Keyword arguments:
    fmt -- "csv", "json" or "text" (default "text")
    path -- output file (default None, only return the text)
    with_timing -- include wall-clock timing in JSON output (default False)

    Returns:
    the rendered text
    """

    if fmt == "csv":
        text = format_csv(report)
    elif fmt == "json":
        text = format_json(report, with_timing=with_timing)
    elif fmt == "text":
        text = format_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected one of "
                         f"{', '.join(FORMATS)}")
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
        logger.info("wrote %s report to %s", fmt, path)
    return text

#-----------------------------------------------------------------------------

def load_report(path):
    """Reads a JSON report written by report_emit()."""

    with open(path, "r") as f:
        data = json.load(f)
    try:
        return RunReport.from_dict(data)
    except (KeyError, TypeError, AttributeError) as e:
        raise ValueError(f"{path}: not an ilearn JSON report ({e})") from e

#-----------------------------------------------------------------------------

def parse_report_csv(path):
    """Reads a CSV report back into a RunReport.

    Only the accuracy table survives the CSV format; method and dataset
    come back empty and no per-repetition results are restored.
    """

    names, classes = [], []
    per_class, gen, std = {}, {}, {}
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: not an ilearn CSV report")
        for n, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {n}: expected 3 fields")
            name, key, value = row
            if name not in per_class:
                names.append(name)
                per_class[name] = {}
            value = None if value == ABSENT else float(value)
            if key == "gen":
                gen[name] = value
            elif key == "std":
                std[name] = value
            else:
                c = int(key)
                if c not in classes:
                    classes.append(c)
                per_class[name][c] = value
    classes = tuple(sorted(classes))
    return RunReport(method="", dataset="", classes=classes,
                     increment_names=tuple(names),
                     per_class=[[per_class[name].get(c) for c in classes]
                                for name in names],
                     gen=[gen.get(name) for name in names],
                     std=[std.get(name) for name in names])
