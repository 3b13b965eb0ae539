"""Runs the CLI on a few scenarios and validates summary.json and the
shipped configs against the schemas in schemas/."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

tool, root = pathlib.Path(sys.argv[1]).resolve(), pathlib.Path(sys.argv[2]).resolve()
summary_schema = json.loads((root / "schemas/summary.schema.json").read_text())
config_schema = json.loads((root / "schemas/config.schema.json").read_text())

runs = [
    ["--N", "6", "--delta", "1.1"],
    ["--N", "5", "--protocol", "attach", "--delta", "0.8"],
    ["--N", "6", "--temperature", "0.5", "--policy", "outcome0"],
    ["--N", "4", "--gamma", "0.05", "--protocol", "attach", "--variant", "re"],
]
with tempfile.TemporaryDirectory() as tmp:
    for i, args in enumerate(runs):
        out = pathlib.Path(tmp) / str(i)
        subprocess.run([str(tool), "trace", *args, "--out", str(out)], check=True, stdout=subprocess.DEVNULL)
        jsonschema.validate(json.loads((out / "summary.json").read_text()), summary_schema)
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header.startswith("t,f_av"), header

for cfg in sorted((root / "configs").glob("*.json")):
    jsonschema.validate(json.loads(cfg.read_text()), config_schema)

bad = {"scenario": {"N": 4, "Delta": -0.5}}
try:
    jsonschema.validate(bad, config_schema)
except jsonschema.ValidationError:
    pass
else:
    raise SystemExit("schema accepted Delta < 0")
print("schemas ok")
