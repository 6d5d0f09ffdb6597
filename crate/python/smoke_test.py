#!/usr/bin/env python3
"""Smoke test for the specmap extension module.

Build the module first:

    cargo build -p specmap-py --features extension-module --release
    cp target/release/libspecmap.so python/specmap.so

Then run `python python/smoke_test.py`.
"""

import json
import math
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import specmap


def main() -> int:
    # Physics helpers.
    hc = specmap.rayleigh_threshold(905e-9, 0.0)
    assert abs(hc - 905e-9 / 8) < 1e-24, hc
    rho = specmap.scattering_factor(hc, 905e-9, 0.0)
    assert abs(rho - math.exp(-math.pi**2 / 8)) < 1e-12, rho
    db = specmap.specularity_db([1.0, 1.0, 1.0, 9.0])
    assert abs(db - 4.7712) < 1e-4, db

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # Reference dataset -> feature table.
        n = specmap.write_reference_data(str(tmp / "data"))
        assert n == 15, n
        table = specmap.FeatureTable(str(tmp / "data" / "manifest.json"))
        assert len(table) > 1000, len(table)
        materials = table.materials()
        assert "metal_copper" in materials and "carpet" in materials

        # Train on everything except the canonical test surfaces, then
        # score a couple of held-out rows.
        held_out = {"metal_tin", "tv", "styrofoam", "fabric_pinboard"}
        model = specmap.train(
            table, [m for m in materials if m not in held_out], model="forest", seed=7
        )
        rows = table.rows()
        labels = table.labels()
        provenance = table.provenance()
        test_rows = [r for r, p in zip(rows, provenance) if p[0] in held_out]
        predictions = model.predict(test_rows)
        assert len(predictions) == len(test_rows)
        assert all(label in ("semi", "low") for label, _ in predictions)
        assert all(0.0 <= p <= 1.0 for _, p in predictions)

        # Round-trip through serialization.
        model.save(str(tmp / "forest.json"))
        reloaded = specmap.load_model(str(tmp / "forest.json"))
        assert reloaded.predict(test_rows[:5]) == predictions[:5]

        # A held-out low-specular surface should be nearly all "low".
        styro = [
            pred
            for pred, p in zip(predictions, (q for q in provenance if q[0] in held_out))
            if p[0] == "styrofoam"
        ]
        low_rate = sum(1 for label, _ in styro if label == "low") / len(styro)
        assert low_rate > 0.8, low_rate

        # Fixed-split evaluation, two seeds to stay quick.
        results = specmap.evaluate_fixed(table, seeds=2, master_seed=99)
        assert set(results) == {"forest", "boosted", "mlp"}
        for stats in results.values():
            assert stats["low_recall"] > 0.9, stats

        # Tiny sweep for shape.
        entries = specmap.sweep(table, [3], repeats=2, master_seed=7)
        assert {e["model"] for e in entries} == {"forest", "boosted", "mlp"}

        # Synthetic generation round-trips through the same CSV schema.
        spec = {"name": "smoke", "h_rms": 0.0, "seed": 3}
        count = specmap.generate_synthetic_scan(json.dumps(spec), str(tmp / "smoke.csv"))
        assert count > 1000, count

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
