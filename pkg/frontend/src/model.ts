/** Console view model: all state and transitions, no DOM.
 *
 * The model never does color math; swatches and gauges are rendered
 * verbatim from API-returned channel values. One in-flight mix at a time;
 * adjustments are disabled while a request is pending.
 */

import { ApiClient, ApiError, OfflineError } from "./client.js";
import type { DeviceStateDto, Modifier, RunRecordDto } from "./types.js";

export interface Banner {
  code: string;
  message: string;
}

export class ConsoleViewModel {
  requestText = "";
  current: RunRecordDto | null = null;
  history: RunRecordDto[] = [];
  deviceState: DeviceStateDto | null = null;
  pending = false;
  offline = false;
  banner: Banner | null = null;

  constructor(private readonly client: ApiClient) {}

  get canSubmit(): boolean {
    return this.requestText.trim().length > 0 && !this.pending;
  }

  get canAdjust(): boolean {
    return this.current !== null && !this.pending;
  }

  async submit(): Promise<void> {
    if (!this.canSubmit) return;
    await this.runMutation(() => this.client.mix(this.requestText.trim()));
  }

  async adjust(modifier: Modifier): Promise<void> {
    if (!this.canAdjust) return;
    const runId = this.current!.id;
    await this.runMutation(() => this.client.adjust(runId, modifier));
  }

  private async runMutation(call: () => Promise<RunRecordDto>): Promise<void> {
    this.pending = true;
    this.banner = null;
    try {
      const record = await call();
      this.current = record;
      this.history = [record, ...this.history];
      this.offline = false;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.offline = true;
        this.banner = { code: "OFFLINE", message: "server unreachable" };
      } else if (err instanceof ApiError) {
        this.banner = { code: err.code, message: err.message };
      } else {
        this.banner = { code: "UNEXPECTED", message: String(err) };
      }
    } finally {
      this.pending = false;
    }
  }

  /** One poll tick: refresh gauges, flip the offline badge on failure. */
  async pollState(): Promise<void> {
    try {
      this.deviceState = await this.client.state();
      this.offline = false;
    } catch {
      this.offline = true;
    }
  }

  async loadHistory(): Promise<void> {
    try {
      const records = await this.client.history();
      this.history = records.slice().reverse(); // newest first
      this.current = this.history[0] ?? null;
      this.offline = false;
    } catch {
      this.offline = true;
    }
  }
}

/** CSS color for a unit-interval RGB triple returned by the API. */
export function cssColor(rgb: [number, number, number]): string {
  const [r, g, b] = rgb.map((c) => Math.round(c * 255));
  return `rgb(${r}, ${g}, ${b})`;
}
