// World deltas: the server answers each executed utterance with the
// objects (and agent fields) that changed. The view never mutates the
// world itself — it only folds these deltas into the last known state.

import { WorldDeltaJson, WorldJson, WorldObjectJson } from "./types.js";

export function applyWorldDelta(world: WorldJson, delta: WorldDeltaJson): WorldJson {
  const replaced = new Map<string, WorldObjectJson>();
  for (const obj of delta.objects) {
    replaced.set(obj.id, obj);
  }
  const objects: WorldObjectJson[] = world.objects.map((o) => replaced.get(o.id) ?? o);
  const known = new Set(world.objects.map((o) => o.id));
  for (const obj of delta.objects) {
    if (!known.has(obj.id)) {
      objects.push(obj);
    }
  }
  return {
    grid_size: world.grid_size,
    agent_position: delta.agent_position ?? world.agent_position,
    held: "held" in delta ? delta.held ?? null : world.held,
    step: world.step,
    objects: objects,
  };
}

// Ids to flash in the world view after a turn.
export function changedIds(delta: WorldDeltaJson): Set<string> {
  return new Set(delta.objects.map((o) => o.id));
}
