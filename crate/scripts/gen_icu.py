"""Synthetic ICU training sample used by the example configuration."""
import random

rng = random.Random(7)
PROFILES = {
    "stable": dict(temp=(36.8, 0.4), hr=(78, 9), sbp=(122, 12), rr=(15, 2), lactate=(1.1, 0.3),
                   rhythm=0.05, mental=0.05),
    "sepsis": dict(temp=(38.9, 0.7), hr=(118, 12), sbp=(92, 12), rr=(25, 4), lactate=(3.6, 1.0),
                   rhythm=0.15, mental=0.45),
    "heart_failure": dict(temp=(36.6, 0.4), hr=(104, 14), sbp=(150, 18), rr=(24, 4), lactate=(1.8, 0.5),
                          rhythm=0.55, mental=0.15),
}
COUNTS = {"stable": 60, "sepsis": 50, "heart_failure": 40}

print("temp,hr,sbp,rr,lactate,rhythm,mental,label")
for label, n in COUNTS.items():
    p = PROFILES[label]
    for _ in range(n):
        temp = round(rng.gauss(*p["temp"]), 1)
        hr = round(rng.gauss(*p["hr"]))
        sbp = round(rng.gauss(*p["sbp"]))
        rr = max(6, round(rng.gauss(*p["rr"])))
        lac = max(0.3, round(rng.gauss(*p["lactate"]), 1))
        rhythm = "afib" if rng.random() < p["rhythm"] else "sinus"
        mental = "confused" if rng.random() < p["mental"] else "alert"
        print(f"{temp},{hr},{sbp},{rr},{lac},{rhythm},{mental},{label}")
