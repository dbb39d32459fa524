"""Regenerate the bundled benchmark stand-ins in data/.

The classic UCI/StatLib tables used by the experiments are not
redistributed here; instead this script writes deterministic synthetic
datasets with the same shapes, value ranges, missingness pattern, and a
comparable signal-to-noise character:

  breast_cancer.csv   699 rows, 9 ordinal 1-10 features, benign/malignant,
                      16 rows with a missing bare_nuclei cell
  ionosphere.csv      351 rows, 1 binary + 32 continuous, good/bad
  sonar.csv           208 rows, 60 spectral-band features, rock/metal
  boston_housing.csv  506 rows, 12 continuous + 1 binary, price outcome

Run from the repository root:  python3 scripts/make_datasets.py
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data"


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fmt(x, nd=4):
    return f"{x:.{nd}f}"


def make_breast_cancer(rng):
    n = 699
    names = ["clump_thickness", "cell_size", "cell_shape", "adhesion",
             "epithelial_size", "bare_nuclei", "bland_chromatin",
             "normal_nucleoli", "mitoses"]
    # two tight clusters on a shared factor: benign cases sit on the low
    # ordinal levels, malignant ones spread over the middle, mirroring the
    # strongly clustered, highly correlated real cytology panel
    malignant_draw = rng.random(n) < 0.35
    severity = np.where(malignant_draw,
                        rng.normal(1.1, 0.55, n), rng.normal(-0.7, 0.3, n))
    loadings = np.array([0.9, 1.1, 1.05, 0.7, 0.8, 1.2, 0.85, 0.9, 0.5])
    feats = np.empty((n, 9), dtype=int)
    for j, load in enumerate(loadings):
        z = load * severity + rng.normal(0, 0.25, n)
        feats[:, j] = np.clip(np.round(3.4 + 0.55 * z), 1, 10).astype(int)
    label_p = sigmoid(2.6 * severity - 1.1 + rng.normal(0, 0.6, n))
    labels = np.where(rng.random(n) < label_p, "malignant", "benign")
    missing_rows = rng.choice(n, size=16, replace=False)
    rows = []
    for i in range(n):
        cells = [str(v) for v in feats[i]]
        if i in set(missing_rows):
            cells[5] = "NA"
        rows.append(cells + [labels[i]])
    write_csv(OUT / "breast_cancer.csv", names + ["class"], rows)


def make_ionosphere(rng):
    n = 351
    pulse = rng.integers(0, 2, n)
    latent = rng.normal(0, 1, (n, 4))
    cols = []
    for j in range(32):
        w = rng.normal(0, 0.7, 4)
        x = np.tanh(latent @ w + 0.3 * rng.normal(0, 1, n))
        cols.append(x)
    X = np.column_stack(cols)
    score = (1.6 * X[:, 0] - 1.2 * X[:, 3] * X[:, 7] + 0.9 * X[:, 12]
             + 0.8 * pulse - 0.2 + rng.normal(0, 0.9, n))
    labels = np.where(sigmoid(score) > rng.random(n), "good", "bad")
    header = ["pulse"] + [f"a{j:02d}" for j in range(1, 33)] + ["class"]
    rows = [[str(pulse[i])] + [fmt(v) for v in X[i]] + [labels[i]]
            for i in range(n)]
    write_csv(OUT / "ionosphere.csv", header, rows)


def make_sonar(rng):
    n = 208
    grid = np.linspace(0, 1, 60)
    rows = []
    labels = []
    for i in range(n):
        is_metal = rng.random() < 0.53
        centers = rng.uniform(0.1, 0.9, 3)
        widths = rng.uniform(0.05, 0.2, 3)
        heights = rng.uniform(0.3, 0.9, 3)
        if is_metal:
            # metal returns: sharper mid-band resonance
            centers[0] = rng.uniform(0.35, 0.55)
            widths[0] *= 0.6
            heights[0] = rng.uniform(0.6, 1.0)
        curve = np.zeros(60)
        for c, wd, h in zip(centers, widths, heights):
            curve += h * np.exp(-((grid - c) ** 2) / (2 * wd ** 2))
        curve += rng.normal(0, 0.05, 60)
        curve = np.clip(curve / curve.max() * rng.uniform(0.5, 1.0), 0.0, 1.0)
        rows.append([fmt(v) for v in curve])
        labels.append("metal" if is_metal else "rock")
    header = [f"band{j:02d}" for j in range(1, 61)] + ["class"]
    write_csv(OUT / "sonar.csv", header,
              [r + [lab] for r, lab in zip(rows, labels)])


def make_boston(rng):
    n = 506
    rooms = rng.normal(6.3, 0.7, n)
    lowstat = np.clip(rng.lognormal(2.3, 0.6, n), 1.7, 38)
    crime = np.clip(rng.lognormal(-1.2, 2.0, n), 0.006, 89)
    nox_ = np.clip(0.4 + 0.02 * np.log1p(crime) * 5 + rng.normal(0, 0.08, n),
                   0.38, 0.87)
    industry = np.clip(3 + 18 * (nox_ - 0.4) + rng.normal(0, 3, n), 0.5, 28)
    age = np.clip(20 + 60 * (nox_ - 0.38) / 0.5 + rng.normal(0, 20, n), 3, 100)
    dist = np.clip(11 - 9 * (nox_ - 0.38) / 0.5 + rng.normal(0, 1.5, n), 1.1, 12.1)
    tax_ = np.clip(200 + 300 * (nox_ - 0.38) + rng.normal(0, 90, n), 187, 711)
    ptr = np.clip(rng.normal(18.4, 2.1, n), 12.6, 22)
    zone = np.where(rng.random(n) < 0.73, 0.0,
                    rng.choice([12.5, 25, 50, 80, 95], n))
    radial = np.clip(np.round(np.exp(rng.normal(1.4, 0.8, n))), 1, 24)
    bk = np.clip(rng.normal(356, 60, n), 0.3, 397)
    river = (rng.random(n) < 0.07).astype(int)
    price = (22.5
             + 4.5 * (rooms - 6.3)
             + 2.8 * np.clip(rooms - 6.8, 0, None) ** 2   # premium for big homes
             - 0.38 * (lowstat - 12)
             + 0.011 * (lowstat - 12) ** 2
             - 12.0 * (nox_ - 0.55)
             - 0.55 * (ptr - 18.4)
             - 1.1 * np.log1p(crime)
             - 0.035 * (age - 50) * (nox_ > 0.6)          # old stock in dirty air
             + 1.8 * (dist < 2.5) * (lowstat < 10)        # desirable inner ring
             - 0.006 * (tax_ - 330)
             + 0.9 * np.tanh((bk - 356) / 60)
             + 3.0 * river
             + rng.normal(0, 3.4, n))
    price = np.clip(price, 5, 50)
    header = ["crim", "zn", "indus", "nox", "rm", "age", "dis", "rad", "tax",
              "ptratio", "bk", "lstat", "river", "medv"]
    rows = []
    for i in range(n):
        rows.append([fmt(crime[i]), fmt(zone[i], 1), fmt(industry[i], 2),
                     fmt(nox_[i]), fmt(rooms[i], 3), fmt(age[i], 1),
                     fmt(dist[i]), str(int(radial[i])), fmt(tax_[i], 0),
                     fmt(ptr[i], 1), fmt(bk[i], 2), fmt(lowstat[i], 2),
                     "yes" if river[i] else "no", fmt(price[i], 2)])
    write_csv(OUT / "boston_housing.csv", header, rows)


def main():
    OUT.mkdir(exist_ok=True)
    # one independent stream per dataset so tweaking a generator never
    # perturbs the other files
    for i, make in enumerate([make_breast_cancer, make_ionosphere,
                              make_sonar, make_boston]):
        make(np.random.default_rng([20240817, i]))


if __name__ == "__main__":
    main()
