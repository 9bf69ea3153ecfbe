"""Rebuild rcp45_emissions.csv from decadal RCP4.5 fossil and industrial CO2 emissions.

Annual emissions (GtC per year) are read off the published RCP4.5 pathway at the
start of each decade from 2015 onward; the pathway is flat-to-declining after
2100 and the tail is extended with a slow taper to 2315. Each model period is ten
years, so a decade total is ten times the annual rate, converted to GtCO2.
"""

import csv
import sys

ANNUAL_GTC = [
    10.3, 10.9, 11.2, 10.7, 9.3, 7.4, 5.6, 4.5, 4.1, 3.8, 3.5, 3.2, 2.9, 2.6, 2.4, 2.2, 2.0, 1.9,
]
TAIL_START, TAIL_END = 1.8, 1.5
PERIODS = 31
CO2_PER_C = 44.0 / 12.0


def series():
    values = list(ANNUAL_GTC)
    tail = PERIODS - len(values)
    for k in range(tail):
        values.append(TAIL_START + (TAIL_END - TAIL_START) * k / (tail - 1))
    return [10.0 * v * CO2_PER_C for v in values]


def main(path):
    with open(path, "w", newline="") as f:
        f.write("# RCP4.5 CO2 emissions per decade, decade 0 starting in 2015 (see derive_rcp45.py)\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["decade_index", "gtco2_per_decade"])
        for t, v in enumerate(series()):
            w.writerow([t, f"{v:.6f}"])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "rcp45_emissions.csv")
