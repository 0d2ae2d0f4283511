"""
Example 9: Remove the files written by the other examples
"""
import glob
import json
import os
import shutil

# Load example configuration
try:
    with open("example_config.json", "r") as f:
        config = json.load(f)
except FileNotFoundError:
    print("❌ No example_config.json found. Nothing to clean up.")
    exit(0)

for key in ("graph", "image", "checkpoint"):
    path = config.get(key)
    if path and os.path.exists(path):
        os.remove(path)
        print(f"✓ Removed {path}")

if config.get("data") and os.path.isdir(config["data"]):
    shutil.rmtree(config["data"])
    print(f"✓ Removed {config['data']}/")

for path in glob.glob("example_embeddings_branch*.csv"):
    os.remove(path)
    print(f"✓ Removed {path}")

os.remove("example_config.json")
print("✓ Configuration file removed")

print("\n✓ Cleanup complete!")
