"""Renders the three-point fixture and checks the SVG with a real XML parser."""
import subprocess
import sys
import xml.etree.ElementTree as ET

tool, fixtures, out = sys.argv[1:4]
subprocess.run([tool, "render", f"{fixtures}/render3.json", f"{fixtures}/labels3.json", out],
               check=True, stdout=subprocess.DEVNULL)
root = ET.parse(out).getroot()
ns = "{http://www.w3.org/2000/svg}"
assert root.tag == ns + "svg", root.tag
children = list(root)
circles = [c for c in children if c.tag == ns + "circle"]
rects = [c for c in children if c.tag == ns + "rect"]
assert len(children) == 4, len(children)
assert len(circles) == 3 and len(rects) == 1
assert sum(c.get("fill") == "none" for c in circles) == 1
print("svg ok: 1 background + 3 circles, 1 hollow")
