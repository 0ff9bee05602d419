import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diracjacobi.chart_tensor import Chart, DifferentialForm, Multivector, VectorField
from diracjacobi.symcalc import SamplingPolicy, parse


@pytest.fixture
def policy():
    return SamplingPolicy(seed=2024, count=30)


@pytest.fixture
def r2():
    return Chart("R2", ("x", "y"))


@pytest.fixture
def r3():
    return Chart("R3", ("x", "y", "z"))


class RandomTensors:
    """Seeded generators for small polynomial fields and forms."""

    def __init__(self, chart: Chart, seed: int):
        self.chart = chart
        self.rng = random.Random(seed)

    def poly(self, degree: int = 2):
        rng = self.rng
        monomials = ["1"] + list(self.chart.coords)
        if degree >= 2:
            cs = self.chart.coords
            monomials += [f"{a}*{b}" for i, a in enumerate(cs) for b in cs[i:]]
        terms = []
        for m in monomials:
            c = rng.randint(-2, 2)
            if c:
                terms.append(f"{c}*{m}")
        return parse(" + ".join(terms) or "0", self.chart.coords)

    def vector_field(self) -> VectorField:
        return VectorField(self.chart, tuple(self.poly() for _ in self.chart.coords))

    def form(self, degree: int) -> DifferentialForm:
        from itertools import combinations

        table = {idx: self.poly() for idx in combinations(range(self.chart.dim), degree)}
        return DifferentialForm(self.chart, degree, table)

    def multivector(self, degree: int) -> Multivector:
        from itertools import combinations

        table = {idx: self.poly() for idx in combinations(range(self.chart.dim), degree)}
        return Multivector(self.chart, degree, table)

    def point(self, lo=-1.5, hi=1.5) -> dict:
        return {c: self.rng.uniform(lo, hi) for c in self.chart.coords}


@pytest.fixture
def rand_r3(r3):
    return RandomTensors(r3, seed=99)


@pytest.fixture
def rand_r2(r2):
    return RandomTensors(r2, seed=77)
