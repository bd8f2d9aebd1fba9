"""Regenerate the bundled demo CSVs (deterministic, seeded).

The files mirror the schemas of the classic public demo datasets (cars,
movies, Seattle weather) — same column names and types, synthetic rows with
planted correlations so insight detection has something to find.

Usage: python scripts/make_demo_data.py [out_dir]
"""

from __future__ import annotations

import csv
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

ORIGINS = ("USA", "Europe", "Japan")
GENRES = (
    "Action", "Adventure", "Comedy", "Drama", "Horror", "Musical",
    "Romantic Comedy", "Thriller", "Western", "Documentary", "Black Comedy",
    "Concert",
)
RATINGS = ("G", "PG", "PG-13", "R", "Not Rated")
WEATHER = ("drizzle", "rain", "sun", "snow", "fog")
MONTHS = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)


def make_cars(rng: np.random.Generator, n: int = 240) -> tuple[list[str], list[list]]:
    header = [
        "Name", "Miles_per_Gallon", "Cylinders", "Displacement", "Horsepower",
        "Weight_in_lbs", "Acceleration", "Year", "Origin",
    ]
    brands = (
        "chevrolet", "ford", "toyota", "datsun", "volkswagen", "plymouth",
        "buick", "honda", "mazda", "peugeot", "fiat", "audi",
    )
    models = ("custom", "deluxe", "gl", "sport", "wagon", "sedan", "mark ii", "gt")
    # correlation structure: horsepower~weight strong (~0.85) and
    # horsepower~displacement moderate-strong (~0.7); everything else stays
    # below the 0.6 insight threshold so insight counts stay realistic
    rows = []
    for i in range(n):
        hp = max(40.0, rng.normal(120, 35))
        weight = 1600 + hp * 13 + rng.normal(0, 280)
        disp = max(60.0, hp * 2.2 + rng.normal(0, 80))
        mpg = max(8.0, 38 - hp * 0.10 + rng.normal(0, 6.5))
        accel = max(8.0, 21 - hp * 0.025 + rng.normal(0, 2.4))
        cyl = int(rng.choice([4, 4, 4, 6, 6, 8]))
        year = 1970 + int(rng.integers(0, 13))
        name = f"{rng.choice(brands)} {rng.choice(models)} {i % 97}"
        rows.append([
            name,
            "" if rng.random() < 0.03 else round(mpg, 1),
            cyl,
            round(disp, 1),
            "" if rng.random() < 0.02 else int(round(hp)),
            int(round(weight)),
            round(accel, 1),
            f"{year}-01-01",
            rng.choice(ORIGINS),
        ])
    return header, rows


def make_movies(rng: np.random.Generator, n: int = 300) -> tuple[list[str], list[list]]:
    header = [
        "Title", "US Gross", "Worldwide Gross", "Production Budget",
        "Release Date", "Major Genre", "MPAA Rating", "Director",
        "IMDB Rating", "Rotten Tomatoes Rating",
    ]
    words = (
        "Midnight", "Golden", "Last", "Secret", "Broken", "Silent", "Crimson",
        "Lost", "Electric", "Paper", "Winter", "Iron",
    )
    nouns = (
        "River", "Empire", "Garden", "Signal", "Harbor", "Mountain", "Letter",
        "Voyage", "Mirror", "Circus", "Engine", "Island",
    )
    directors = [f"Director {chr(65 + i % 26)}. {nouns[i % len(nouns)]}{i // 12}" for i in range(72)]
    # US gross correlates strongly only with worldwide gross; budget sits
    # around 0.5 and the rating pair (imdb ~ rotten tomatoes) is its own
    # strong pair that does not involve the gross columns
    rows = []
    for i in range(n):
        budget = float(np.exp(rng.normal(17.0, 0.8)))
        imdb = float(np.clip(rng.normal(6.2, 1.1), 1.0, 9.8))
        rt = float(np.clip(imdb * 9 + rng.normal(0, 9), 1, 100))
        us = float(
            np.exp(0.5 * np.log(budget) + rng.normal(8.6, 0.75) + imdb * 0.02)
        )
        ww = us * (1.6 + rng.normal(0, 0.25)) + budget * 0.2
        y = 1985 + int(rng.integers(0, 26))
        m = MONTHS[int(rng.integers(0, 12))]
        d = int(rng.integers(1, 28))
        rows.append([
            f"The {rng.choice(words)} {rng.choice(nouns)} {i}",
            "" if rng.random() < 0.05 else int(us),
            int(ww),
            int(budget),
            f"{m} {d} {y}",
            "" if rng.random() < 0.04 else rng.choice(GENRES),
            rng.choice(RATINGS),
            directors[int(rng.integers(0, len(directors)))],
            round(imdb, 1),
            "" if rng.random() < 0.06 else int(rt),
        ])
    return header, rows


def make_weather(rng: np.random.Generator, n: int = 365) -> tuple[list[str], list[list]]:
    header = ["date", "precipitation", "temp_max", "temp_min", "wind", "weather"]
    # temp_max ~ temp_min is the one strong pair; wind and precipitation stay
    # weakly related to everything else
    start = date(2014, 1, 1)
    rows = []
    for i in range(n):
        day = start + timedelta(days=i)
        season = np.sin(2 * np.pi * (i / 365.0 - 0.25))
        tmax = 15 + 9 * season + rng.normal(0, 2.5)
        tmin = tmax - abs(rng.normal(6, 2.5))
        wind = max(0.4, rng.gamma(2.2, 1.4))
        rainy = rng.random() < (0.45 - 0.3 * season + wind * 0.03)
        precip = round(float(rng.gamma(2.0, 2.4)), 1) if rainy else 0.0
        if precip > 0 and tmax < 3:
            kind = "snow"
        elif precip > 6:
            kind = "rain"
        elif precip > 0:
            kind = "drizzle" if wind < 3 else "rain"
        else:
            kind = "sun" if rng.random() < 0.75 else "fog"
        rows.append([
            day.isoformat(),
            precip,
            round(tmax, 1),
            round(tmin, 1),
            round(wind, 1),
            kind,
        ])
    return header, rows


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "data"
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240817)
    for name, maker in (("cars", make_cars), ("movies", make_movies), ("seattle-weather", make_weather)):
        header, rows = maker(rng)
        write_csv(out / f"{name}.csv", header, rows)
        print(f"wrote {out / f'{name}.csv'} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
