import json

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def kquants_registry_file(tmp_path):
    doc = {
        "types": [
            {"name": "q3_K", "nominal_bits": 3, "effective_bits": 3.4},
            {"name": "q4_K", "nominal_bits": 4, "effective_bits": 4.5},
            {"name": "q5_K", "nominal_bits": 5, "effective_bits": 5.5},
            {"name": "q6_K", "nominal_bits": 6, "effective_bits": 6.6},
            {"name": "q8_0", "nominal_bits": 8, "effective_bits": 8.5},
        ],
        "metrics": [
            {"name": "memory", "unit": "GB", "direction": "cost"},
            {"name": "latency", "unit": "ms/token", "direction": "cost"},
        ],
    }
    path = tmp_path / "registry.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def llama31_qos_file(tmp_path):
    path = tmp_path / "llama31.csv"
    path.write_text(
        "type,memory,latency\n"
        "q3_K,3.21,232.0\n"
        "q4_K,4.21,123.9\n"
        "q5_K,5.14,138.7\n"
        "q6_K,6.14,191.2\n"
        "q8_0,8,133.3\n"
    )
    return path
