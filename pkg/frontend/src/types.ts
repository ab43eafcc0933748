// The JSON contract of the decomposition-teaching service. Field names
// mirror the server payloads exactly (snake_case); every interface here
// corresponds to one documented endpoint or SSE event shape.

export const TASK_TYPES = [
  "PickAndPlace",
  "PickTwoAndPlace",
  "LookAtInLight",
  "NestedPickAndPlace",
  "PickCleanPlace",
  "PickHeatPlace",
  "PickCoolPlace",
] as const;

export type TaskType = (typeof TASK_TYPES)[number];

// Rendered verbatim in the chat panel when the robot refuses.
export const NOT_SURE_MESSAGE = "I'm sorry - I don't understand!";

export type Phase = "interaction" | "teaching" | "retraining" | "done";

export type ResponseKind = "executed" | "not_sure";

export interface WorldObjectJson {
  id: string;
  type: string;
  position: number[];
  visible: boolean;
  toggled: boolean;
  open: boolean;
  is_held: boolean;
  dirty: boolean;
  hot: boolean;
  cold: boolean;
  contained_in: string | null;
}

export interface WorldJson {
  grid_size: number;
  agent_position: number[];
  held: string | null;
  step: number;
  objects: WorldObjectJson[];
}

export interface TaskJson {
  task_type: string;
  target: string;
  destination: string;
  via: string | null;
  min_primitives: number;
  instruction: string;
}

export interface MetricsJson {
  examples_taught: number[];
  per_turn_complexity: number[];
  normalized_episode_length: number[];
}

export interface MetricsWithVersionJson extends MetricsJson {
  version: number;
}

export interface SessionJson {
  session_id: string;
  user_id: string;
  task_type: string;
  episode_index: number;
  episodes_total: number;
  phase: Phase;
  task: TaskJson;
  world: WorldJson;
}

export interface StateJson extends SessionJson {
  goal_reached: boolean;
  metrics: MetricsJson;
  teachable?: TeachableJson[];
}

export interface FollowingTurnJson {
  turn: number;
  utterance: string;
  rendered_actions: string[];
}

export interface TeachableJson {
  turn: number;
  utterance: string;
  following: FollowingTurnJson[];
}

export interface WorldDeltaJson {
  objects: WorldObjectJson[];
  agent_position?: number[];
  held?: string | null;
}

export interface UtteranceResponseJson {
  response_kind: ResponseKind;
  message: string | null;
  turn: number;
  program: string | null;
  rendered_actions: string[];
  error: string | null;
  world_delta: WorldDeltaJson;
  goal_reached: boolean;
  metrics: MetricsJson;
  phase: Phase;
  teachable?: TeachableJson[];
}

export interface AnnotationJson {
  target_turn: number;
  span: [number, number];
}

export interface TeachingResponseJson {
  accepted: number;
  retraining_started: boolean;
  phase: Phase;
}

export interface AbandonResponseJson {
  phase: Phase;
  episode_index: number;
}

export interface LogResponseJson {
  turns: Record<string, unknown>[];
}

// SSE event payloads, keyed by their event name on the stream.

export interface PhaseEventJson {
  phase: Phase;
  episode_index: number;
}

export interface TurnEventJson {
  turn: number;
  utterance: string;
  response_kind: ResponseKind;
}

export interface RetrainingProgressJson {
  stage: string;
  version?: number;
  examples?: number;
}
