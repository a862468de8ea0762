"""Writes data/sample_lab.txt: a synthetic three-mote log in the Intel lab
format (date time epoch moteid temperature humidity light voltage).

Readings arrive roughly every 90 s with jitter, a few rows are dropped and a
few are malformed, so the file exercises parsing and resampling.
"""

import math
import random
from datetime import datetime, timedelta, timezone

START = datetime(2004, 3, 1, tzinfo=timezone.utc)
HOURS = 36


def main(path="data/sample_lab.txt", seed=2004):
    rng = random.Random(seed)
    rows = []
    for mote, bias in ((1, 0.0), (2, 0.3), (3, -0.2)):
        t, epoch = 0.0, 0
        while t < HOURS * 3600:
            day = t / 86400.0
            temp = 19.0 + 4.0 * math.sin(2 * math.pi * (day - 0.3)) + 0.5 * day + bias + rng.gauss(0, 0.15)
            hum = 38.0 - 3.0 * math.sin(2 * math.pi * (day - 0.3)) + rng.gauss(0, 0.4)
            light = max(0.0, 300.0 * math.sin(2 * math.pi * (day - 0.25))) + rng.gauss(0, 5)
            volt = 2.70 - 0.02 * day + rng.gauss(0, 0.003)
            if rng.random() > 0.03:
                stamp = START + timedelta(seconds=t)
                rows.append((t, f"{stamp:%Y-%m-%d %H:%M:%S.%f} {epoch} {mote} "
                                f"{temp:.4f} {hum:.4f} {light:.2f} {volt:.5f}"))
            t += 90.0 + rng.uniform(-20, 20)
            epoch += 1
    rows.sort()
    lines = [r for _, r in rows]
    for i in range(5):
        lines.insert(rng.randrange(len(lines)), "2004-03-01 malformed row")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
