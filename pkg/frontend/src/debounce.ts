/** Returns a wrapper that runs `fn` once, `wait` ms after the last call.
 *
 * `flush` fires a pending call immediately; `cancel` drops it.  Used to
 * separate threshold scrubbing (instant previews) from persistence (one
 * commit per burst of clicks).
 */
export function debounce<Args extends unknown[]>(
  fn: (...args: Args) => void,
  wait: number,
): { (...args: Args): void; flush(): void; cancel(): void } {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let pending: Args | undefined;

  const wrapper = (...args: Args) => {
    pending = args;
    clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      const args = pending!;
      pending = undefined;
      fn(...args);
    }, wait);
  };
  wrapper.flush = () => {
    if (pending === undefined) return;
    clearTimeout(timer);
    timer = undefined;
    const args = pending;
    pending = undefined;
    fn(...args);
  };
  wrapper.cancel = () => {
    clearTimeout(timer);
    timer = undefined;
    pending = undefined;
  };
  return wrapper;
}
