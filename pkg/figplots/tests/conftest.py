import csv

import pytest


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)
    return path


@pytest.fixture
def toy_heatmap_csv(tmp_path):
    # 3 temperatures x 3 fields, single repeat; argmax fields chosen by hand
    columns = ["beta", "h", "alpha", "epsilon", "repeat", "entropy", "deviation"]
    rows = []
    values = {
        (0.5, 0.0): 0.30, (0.5, 1.0): 0.70, (0.5, 2.0): 0.10,
        (1.0, 0.0): 0.20, (1.0, 1.0): 0.40, (1.0, 2.0): 0.90,
        (2.0, 0.0): 0.80, (2.0, 1.0): 0.50, (2.0, 2.0): 0.60,
    }
    for (beta, h), s in values.items():
        rows.append([beta, h, "inf", 1.0, 0, s, 0.1 * s])
    return write_csv(tmp_path / "toy.csv", columns, rows), values
