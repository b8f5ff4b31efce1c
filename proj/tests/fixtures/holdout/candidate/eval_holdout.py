import argparse

import detector

parser = argparse.ArgumentParser()
parser.add_argument("--data", default="data")
args = parser.parse_args()

c = detector.score(args.data)
f1 = 2 * c["tp"] / (2 * c["tp"] + c["fp"] + c["fn"])
print(f"tp={c['tp']} fp={c['fp']} fn={c['fn']}")
print(f"metric: {f1:.6g}")
