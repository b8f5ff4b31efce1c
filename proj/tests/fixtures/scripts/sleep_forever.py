"""Never finishes on its own; used to exercise timeouts."""
import time

print("sleeping", flush=True)
while True:
    time.sleep(1)
