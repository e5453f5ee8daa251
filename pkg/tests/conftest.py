import os
import sys

# make the suite runnable from a fresh checkout, installed or not
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
