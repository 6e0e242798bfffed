import numpy as np
import pytest

from bookingbench.controls import compute_controls
from bookingbench.forecast import forecast_demand
from bookingbench.scenario import default_regular_scenario

PAPER_FARES = (400.0, 300.0, 280.0, 240.0, 200.0, 185.0, 175.0)

# reference per-class demand forecasts (mean, variance) for three demand factors
PAPER_FORECASTS = {
    0.9: (
        np.array([31.9, 17.5, 20.0, 16.8, 13.4, 12.3, 52.6]),
        np.array([23.0, 14.2, 14.2, 16.1, 11.5, 14.3, 19.2]),
    ),
    1.2: (
        np.array([46.2, 24.2, 28.6, 22.9, 18.5, 16.9, 69.8]),
        np.array([25.3, 18.8, 25.5, 26.6, 16.5, 11.2, 28.2]),
    ),
    1.5: (
        np.array([52.7, 28.3, 33.6, 26.1, 21.6, 21.0, 81.8]),
        np.array([32.2, 30.5, 31.8, 23.8, 18.8, 21.1, 33.8]),
    ),
}

PAPER_LIMITS = {
    ("emsrb", 0.9): (200, 171, 155, 134, 117, 104, 91),
    ("emsrb", 1.2): (200, 157, 134, 105, 81, 62, 45),
    ("emsrb", 1.5): (200, 151, 125, 90, 62, 39, 18),
    ("emsrb_mr", 0.9): (200, 165, 155, 125, 109, 109, 96),
    ("emsrb_mr", 1.2): (200, 151, 134, 95, 72, 72, 51),
    ("emsrb_mr", 1.5): (200, 144, 125, 79, 52, 52, 24),
}


@pytest.fixture(scope="session")
def regular():
    return default_regular_scenario()


@pytest.fixture(scope="session")
def regular_forecast(regular):
    return forecast_demand(regular, 100, 1)


@pytest.fixture(scope="session")
def mr_controls(regular, regular_forecast):
    return compute_controls(regular_forecast, regular.fare_structure, "emsrb_mr")
