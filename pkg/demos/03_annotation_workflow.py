"""Drive an annotation session from code, no browser involved.

Builds a throwaway folder of phantoms, opens a session, and walks the
accept / adjust / fail workflow the UI exposes, printing the session
summary after each step.  The sidecar and mask files land in a temp
directory that is printed at the end so you can inspect the layout.
"""

import tempfile
from pathlib import Path

from easygt import open_session, save_image
from easygt.phantom import PhantomSpec, generate_phantom

root = Path(tempfile.mkdtemp(prefix="easygt_demo_"))
for i in range(4):
    img, _ = generate_phantom(PhantomSpec(width=192, height=192, lobes=1 + i, seed=60 + i))
    save_image(img, root / f"wbc_{i}.png")

session = open_session(root, alpha=0.3)
print("opened:", session.summary())

view = session.view()
print(f"cursor image {view.record.image_id}: "
      f"UTHV {view.thresholds.uthv:.1f}, mask {view.mask.nucleus_pixels()} px")

session.accept()
print("after accept:", session.summary())

session.adjust_threshold(-8)
view = session.view()
print(f"offset -8 widens mask to {view.mask.nucleus_pixels()} px "
      f"(effective {view.thresholds.effective:.1f})")
session.accept()

session.mark_failed()
print("after fail:", session.summary())

print("audit:", session.audit() or "clean")
print()
print("inspect the folder layout:")
for path in sorted(root.rglob("*")):
    print(" ", path.relative_to(root))
