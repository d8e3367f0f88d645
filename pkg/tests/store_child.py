"""Child process for crash tests: appends records and acknowledges each on stdout."""

import os
import sys

from subcorpus.store import Store

root, mode = sys.argv[1], sys.argv[2]
store = Store(root, "en", "fa", batch_size=int(sys.argv[3]) if len(sys.argv) > 3 else 256)
if mode == "torn":
    # die halfway through writing record 6 (the header is not an os.write call)
    real_write = os.write
    calls = {"n": 0}

    def torn_write(fd, data):
        calls["n"] += 1
        if calls["n"] == 6:
            real_write(fd, bytes(data)[: len(data) // 2])
            os._exit(9)
        return real_write(fd, data)

    os.write = torn_write
for i in range(1, 1_000_000):
    store.append("sentence", {"k": i, "text": "x" * (i % 50)})
    sys.stdout.write(f"{i}\n")
    sys.stdout.flush()
