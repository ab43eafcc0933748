// Top-down canvas view of the grid world. Objects are flat colored tiles
// with a short type glyph and small feature badges; every change arrives
// as a server delta and is flashed briefly via the highlight set.

import { WorldJson, WorldObjectJson } from "./types.js";

const BACKGROUND_COLOR = "#14181d";
const GRID_LINE_COLOR = "#272e36";
const AGENT_COLOR = "#4cc3ff";
const AGENT_RING_COLOR = "#e8f6ff";
const HIGHLIGHT_COLOR = "#ffd75e";
const GLYPH_COLOR = "#10131a";
const BADGE_COLORS = {
  hot: "#ff6b57",
  cold: "#6bc7ff",
  dirty: "#a9805b",
  toggled: "#ffe066",
};

// Fixture and frequently-seen types get stable hand-picked colors; the
// rest fall back to a hue hashed from the type name.
const TYPE_COLORS: Record<string, string> = {
  Sink: "#8fa3b0",
  Faucet: "#b9cdd8",
  Fridge: "#9fd3c7",
  Microwave: "#d7a9e3",
  Cabinet: "#b5905f",
  Drawer: "#a58a62",
  Shelf: "#c0a878",
  CounterTop: "#8d98a6",
  DiningTable: "#ad8259",
  CoffeeTable: "#b78f68",
  SideTable: "#c49a70",
  Sofa: "#7f6e9e",
  GarbageCan: "#6e7b72",
  DeskLamp: "#f2d17c",
  FloorLamp: "#e8c36a",
  Mug: "#c96f4a",
  Tomato: "#e05d44",
  Apple: "#d8544f",
  Potato: "#c9a86a",
  Lettuce: "#8fbf6f",
  Bread: "#d9b380",
  Egg: "#ece1cc",
  Plate: "#dfe3e8",
  Bowl: "#aebfd0",
  Pan: "#707a85",
  Pot: "#78828e",
  SoapBar: "#bde3d2",
};

export interface DrawOptions {
  cellSize?: number;
  highlightIds?: Set<string>;
}

export function typeColor(typeName: string): string {
  const fixed = TYPE_COLORS[typeName];
  if (fixed !== undefined) {
    return fixed;
  }
  let hash = 0;
  for (let i = 0; i < typeName.length; i++) {
    hash = (hash * 31 + typeName.charCodeAt(i)) % 360;
  }
  return `hsl(${hash}, 45%, 62%)`;
}

// Short glyph drawn on the tile: camel-case initials ("DeskLamp" -> "DL"),
// otherwise the first two letters.
export function typeGlyph(typeName: string): string {
  const initials = typeName.replace(/[^A-Z]/g, "");
  if (initials.length >= 2) {
    return initials.slice(0, 2);
  }
  return typeName.slice(0, 2);
}

export function drawWorld(canvas: HTMLCanvasElement, world: WorldJson, options: DrawOptions = {}): void {
  const cell = options.cellSize ?? 40;
  const highlight = options.highlightIds ?? new Set<string>();
  const size = world.grid_size * cell;
  const ratio = window.devicePixelRatio || 1;
  canvas.width = size * ratio;
  canvas.height = size * ratio;
  canvas.style.width = size + "px";
  canvas.style.height = size + "px";
  const ctx = canvas.getContext("2d") as CanvasRenderingContext2D;
  ctx.scale(ratio, ratio);

  ctx.fillStyle = BACKGROUND_COLOR;
  ctx.fillRect(0, 0, size, size);

  ctx.strokeStyle = GRID_LINE_COLOR;
  ctx.lineWidth = 1;
  for (let x = 0; x <= world.grid_size; x++) {
    ctx.beginPath();
    ctx.moveTo(x * cell + 0.5, 0);
    ctx.lineTo(x * cell + 0.5, size);
    ctx.stroke();
  }
  for (let y = 0; y <= world.grid_size; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * cell + 0.5);
    ctx.lineTo(size, y * cell + 0.5);
    ctx.stroke();
  }

  // Held and contained objects are not on the floor; the HUD lists them.
  const onGrid = world.objects.filter((o) => !o.is_held && o.contained_in === null);
  const byCell = new Map<string, WorldObjectJson[]>();
  for (const obj of onGrid) {
    const key = `${obj.position[0]},${obj.position[1]}`;
    const bucket = byCell.get(key) ?? [];
    bucket.push(obj);
    byCell.set(key, bucket);
  }

  for (const bucket of byCell.values()) {
    const [cx, cy] = bucket[0].position;
    if (bucket.length === 1) {
      drawObject(ctx, bucket[0], cx * cell, cy * cell, cell, highlight.has(bucket[0].id));
    } else {
      // Stack up to four objects as quadrants of the cell.
      const half = cell / 2;
      bucket.slice(0, 4).forEach((obj, i) => {
        const ox = cx * cell + (i % 2) * half;
        const oy = cy * cell + Math.floor(i / 2) * half;
        drawObject(ctx, obj, ox, oy, half, highlight.has(obj.id));
      });
    }
  }

  drawAgent(ctx, world, cell);
}

function drawObject(
  ctx: CanvasRenderingContext2D,
  obj: WorldObjectJson,
  x: number,
  y: number,
  cell: number,
  highlighted: boolean,
): void {
  const inset = Math.max(2, cell * 0.08);
  const w = cell - inset * 2;
  ctx.beginPath();
  ctx.roundRect(x + inset, y + inset, w, w, Math.max(3, cell * 0.1));
  ctx.fillStyle = typeColor(obj.type);
  ctx.globalAlpha = obj.visible ? 1 : 0.35;
  ctx.fill();
  ctx.globalAlpha = 1;

  if (obj.open) {
    ctx.setLineDash([3, 3]);
  }
  ctx.strokeStyle = highlighted ? HIGHLIGHT_COLOR : "rgba(0, 0, 0, 0.45)";
  ctx.lineWidth = highlighted ? 2.5 : 1;
  ctx.stroke();
  ctx.setLineDash([]);

  if (obj.toggled) {
    ctx.beginPath();
    ctx.roundRect(x + inset - 1.5, y + inset - 1.5, w + 3, w + 3, Math.max(4, cell * 0.12));
    ctx.strokeStyle = BADGE_COLORS.toggled;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  ctx.fillStyle = GLYPH_COLOR;
  ctx.font = `bold ${Math.max(8, cell * 0.3)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(typeGlyph(obj.type), x + cell / 2, y + cell / 2);

  const badges: string[] = [];
  if (obj.hot) {
    badges.push(BADGE_COLORS.hot);
  }
  if (obj.cold) {
    badges.push(BADGE_COLORS.cold);
  }
  if (obj.dirty) {
    badges.push(BADGE_COLORS.dirty);
  }
  badges.forEach((color, i) => {
    ctx.beginPath();
    ctx.arc(x + inset + 4 + i * 8, y + inset + 4, 3, 0, Math.PI * 2);
    ctx.fillStyle = color;
    ctx.fill();
  });
}

function drawAgent(ctx: CanvasRenderingContext2D, world: WorldJson, cell: number): void {
  const [ax, ay] = world.agent_position;
  const cx = ax * cell + cell / 2;
  const cy = ay * cell + cell / 2;
  ctx.beginPath();
  ctx.arc(cx, cy, cell * 0.28, 0, Math.PI * 2);
  ctx.fillStyle = AGENT_COLOR;
  ctx.fill();
  ctx.strokeStyle = AGENT_RING_COLOR;
  ctx.lineWidth = 2;
  ctx.stroke();
  if (world.held !== null) {
    ctx.beginPath();
    ctx.arc(cx + cell * 0.22, cy - cell * 0.22, cell * 0.12, 0, Math.PI * 2);
    const heldObj = world.objects.find((o) => o.id === world.held);
    ctx.fillStyle = heldObj === undefined ? HIGHLIGHT_COLOR : typeColor(heldObj.type);
    ctx.fill();
    ctx.strokeStyle = AGENT_RING_COLOR;
    ctx.lineWidth = 1;
    ctx.stroke();
  }
}

// One-line HUD below the canvas: step, held object, dirty/hot/cold counts.
export function describeWorld(world: WorldJson): string {
  const held = world.objects.find((o) => o.id === world.held);
  const parts = [`step ${world.step}`];
  parts.push(held === undefined ? "hands empty" : `holding ${held.type}`);
  const dirty = world.objects.filter((o) => o.dirty).length;
  if (dirty > 0) {
    parts.push(`${dirty} dirty`);
  }
  return parts.join(" · ");
}
