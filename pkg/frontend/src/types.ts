/** Shapes of the orchestrator API payloads the console consumes. */

/** Unit-interval RGB triple exactly as the server returns it. */
export type Rgb = [number, number, number];

export interface MixPlanDto {
  fractions: number[];
  volumes_ml: number[];
  setpoints: number[];
  flows: number[];
  duration_s: number;
  predicted: Rgb;
  residual: number;
}

export interface DispenseResultDto {
  volumes_ml: number[];
  total_ml: number;
  duration_s: number;
  mixed: Rgb;
  faults: string[];
}

export interface RunRecordDto {
  id: number;
  timestamp: number;
  request_text: string;
  target: Rgb;
  plan: MixPlanDto;
  program_text: string;
  result: DispenseResultDto;
  achieved: Rgb;
  matched: boolean;
  provenance: string;
  translation_latency_s: number;
  seed: number;
}

export interface DeviceStateDto {
  busy: boolean;
  setpoints: number[];
  reservoirs: number[];
  dispensed: number[];
  elapsed_s: number;
  config: {
    pump_count: number;
    ink_strength: number;
    match_threshold: number;
    default_volume_ml: number;
    noise_on: boolean;
    v_max: number;
  };
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export type Modifier = "bright" | "dark" | "pale" | "deep";

export const MODIFIERS: Modifier[] = ["bright", "dark", "pale", "deep"];
