#!/usr/bin/env python3
"""Generate the bundled bus-trace excerpt (Rio de Janeiro street grid area).

The original municipal GPS feed is not redistributable here, so the bundled
excerpt is synthesized: per-bus random-walk paths over the city's bounding
box with jittered report intervals, in the toolkit's CSV schema
(bus_id,timestamp,lat,lon). Converting a raw feed instead only needs those
four columns; see map_raw_row() below for the mapping stub.

Usage: python scripts/make_trace_excerpt.py [out.csv]
"""

import random
import sys
from pathlib import Path

SEED = 20180319
N_BUSES = 110
DURATION_S = 2100          # 35 min of reports per bus
MEAN_INTERVAL_S = 35
BASE_EPOCH = 1_521_460_800  # 2018-03-19 12:00:00 UTC

# city bounding box
LAT_MIN, LAT_MAX = -23.05, -22.80
LON_MIN, LON_MAX = -43.45, -43.15


def map_raw_row(raw: dict) -> tuple[str, int, float, float]:
    """Mapping stub for a raw feed row -> (bus_id, epoch_s, lat, lon)."""
    return (
        str(raw["ordem"]),          # vehicle id
        int(raw["datahora"]) // 1000,
        float(raw["latitude"]),
        float(raw["longitude"]),
    )


def generate(seed: int = SEED) -> list[tuple[str, int, float, float]]:
    rng = random.Random(seed)
    rows = []
    for b in range(N_BUSES):
        bus_id = f"B{10000 + b}"
        t = BASE_EPOCH + rng.randint(0, 600)
        lat = rng.uniform(LAT_MIN + 0.02, LAT_MAX - 0.02)
        lon = rng.uniform(LON_MIN + 0.02, LON_MAX - 0.02)
        heading_lat = rng.uniform(-1.0, 1.0)
        heading_lon = rng.uniform(-1.0, 1.0)
        end = t + DURATION_S
        while t < end:
            rows.append((bus_id, t, round(lat, 6), round(lon, 6)))
            # jittered report interval; occasional longer gap (stop / tunnel)
            gap = rng.uniform(MEAN_INTERVAL_S * 0.5, MEAN_INTERVAL_S * 1.5)
            if rng.random() < 0.03:
                gap += rng.uniform(60, 120)
            t += int(round(gap))
            # ~12 m/s drift with direction wobble
            heading_lat += rng.uniform(-0.4, 0.4)
            heading_lon += rng.uniform(-0.4, 0.4)
            norm = max(1.0, (heading_lat**2 + heading_lon**2) ** 0.5)
            lat += heading_lat / norm * 0.0001 * gap / 10
            lon += heading_lon / norm * 0.0001 * gap / 10
            lat = min(max(lat, LAT_MIN), LAT_MAX)
            lon = min(max(lon, LON_MIN), LON_MAX)
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "src/pdskit/data/rio_excerpt.csv"
    )
    rows = generate()
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write("bus_id,timestamp,lat,lon\n")
        for bus_id, ts, lat, lon in rows:
            fh.write(f"{bus_id},{ts},{lat:.6f},{lon:.6f}\n")
    print(f"wrote {len(rows)} rows for {N_BUSES} buses to {out}")


if __name__ == "__main__":
    main()
