/** The view model and its pure update rules.
 *
 * The UI is stateless beyond `pendingOffset`: everything else is
 * reconstructed from the service on load, navigation, or reload.
 */

import type { RecordInfo, Summary, Thresholds } from "./api.js";

export interface Progress {
  pending: number;
  accepted: number;
  failed: number;
  total: number;
}

export interface ViewModel {
  imageId: string;
  status: RecordInfo["status"];
  orphaned: boolean;
  /** offset stored on the record (persisted) */
  committedOffset: number;
  /** offset currently scrubbed in the UI, not yet committed */
  pendingOffset: number;
  thresholds: Thresholds | null;
  degenerate: boolean;
  progress: Progress;
}

export function progressOf(summary: Summary): Progress {
  return {
    pending: summary.pending,
    accepted: summary.accepted,
    failed: summary.failed,
    total: summary.image_count,
  };
}

/** Build the model for the record at the session cursor. */
export function viewModelFor(records: RecordInfo[], summary: Summary): ViewModel {
  const record = records[Math.min(summary.cursor, records.length - 1)];
  return {
    imageId: record.image_id,
    status: record.status,
    orphaned: record.orphaned,
    committedOffset: record.user_offset,
    pendingOffset: record.user_offset,
    thresholds: null,
    degenerate: false,
    progress: progressOf(summary),
  };
}

/** Step the scrub offset without letting the effective threshold leave [0, 255]. */
export function stepOffset(vm: ViewModel, direction: 1 | -1, coarse: boolean): number {
  const step = (coarse ? 5 : 1) * direction;
  let next = vm.pendingOffset + step;
  if (vm.thresholds) {
    const low = Math.floor(-vm.thresholds.uthv);
    const high = Math.ceil(255 - vm.thresholds.uthv);
    next = Math.min(Math.max(next, low), high);
  }
  return next;
}

/** Whether a further click in this direction could still change the mask. */
export function stepEnabled(vm: ViewModel, direction: 1 | -1): boolean {
  if (vm.degenerate || vm.orphaned) return false;
  if (!vm.thresholds) return true;
  const effective = vm.thresholds.effective;
  return direction > 0 ? effective < 255 : effective > 0;
}
