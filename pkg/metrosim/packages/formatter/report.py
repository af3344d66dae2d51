"""Terminal tables for run summaries, policy reports and sweeps."""

from typing import Iterable, List, Mapping, Sequence

import numpy as np
from cli_helpers.tabular_output import TabularOutputFormatter
from cli_helpers.tabular_output.preprocessors import align_decimals, format_numbers

FLOAT_FORMAT = ".6g"


def _plain(value):
    # numpy scalars are not in cli_helpers' number types
    return value.item() if isinstance(value, np.generic) else value


def column_types(rows: Sequence[Sequence]) -> List[type]:
    """float for all-float columns, int for all-int columns, str otherwise.

    ``None`` cells do not decide a column's type.
    """
    width = max((len(r) for r in rows), default=0)
    types: List[type] = []
    for i in range(width):
        seen = {type(r[i]) for r in rows if i < len(r) and r[i] is not None}
        if seen == {float}:
            types.append(float)
        elif seen == {int}:
            types.append(int)
        else:
            types.append(str)
    return types


def format_table(rows: Iterable[Sequence], headers: Sequence[str], table_format: str = "psql") -> str:
    data = [[_plain(v) for v in r] for r in rows]
    formatter = TabularOutputFormatter(format_name=table_format)
    output = formatter.format_output(
        data,
        list(headers),
        column_types=column_types(data),
        float_format=FLOAT_FORMAT,
        preprocessors=(format_numbers, align_decimals),
        disable_numparse=True,
        preserve_whitespace=True,
    )
    if isinstance(output, str):
        return output
    return "\n".join(output)


def key_value_table(values: Mapping[str, object], table_format: str = "psql") -> str:
    # the value column mixes types, so floats are shortened here
    rows = ((k, format(v, FLOAT_FORMAT) if isinstance(_plain(v), float) else v) for k, v in values.items())
    return format_table(rows, ("name", "value"), table_format)


def supported_formats() -> Sequence[str]:
    return TabularOutputFormatter().supported_formats
