from pathlib import Path

tests_datadir = str(Path(__file__).parent.resolve() / "sample_data")
