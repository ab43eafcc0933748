// Wires the panels together: start form, chat, world canvas, teaching
// cards, retraining progress, and the metric charts. The client is pure:
// every change of state comes from an endpoint response or a server-sent
// event — nothing is predicted locally.

import { ApiClient, ApiError } from "./api.js";
import { metricCharts, renderChartSvg } from "./charts.js";
import { escapeHtml, renderSystemHtml, renderTurnHtml, turnFromResponse } from "./chat.js";
import { applyWorldDelta, changedIds } from "./delta.js";
import { describeWorld, drawWorld } from "./grid.js";
import { SpanSelection } from "./spans.js";
import { EventStreamClient } from "./sse.js";
import {
  MetricsJson,
  Phase,
  SessionJson,
  TaskJson,
  TeachableJson,
  TASK_TYPES,
  WorldJson,
} from "./types.js";

const HIGHLIGHT_MS = 900;

const PHASE_LABELS: Record<Phase, string> = {
  interaction: "Interaction — tell the robot what to do",
  teaching: "Teaching — show which actions solved the refused requests",
  retraining: "Retraining — the robot is learning from your examples",
  done: "Session complete",
};

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

class App {
  client = new ApiClient();
  session: SessionJson | null = null;
  world: WorldJson | null = null;
  phase: Phase = "interaction";
  metrics: MetricsJson | null = null;
  modelVersion: number | null = null;
  episodeShown = 0;
  transcriptHtml: string[] = [];
  cards: TeachableJson[] = [];
  selections = new Map<number, SpanSelection>();
  stream: EventStreamClient | null = null;
  highlight = new Set<string>();
  highlightTimer: number | null = null;
  dragging = false;
  busy = false;

  bind(): void {
    const select = el<HTMLSelectElement>("task-type");
    select.innerHTML = TASK_TYPES.map((t) => `<option value="${t}">${t}</option>`).join("");

    el<HTMLFormElement>("start-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.startSession();
    });
    el<HTMLFormElement>("utterance-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.submitUtterance();
    });
    el<HTMLButtonElement>("abandon-button").addEventListener("click", () => {
      void this.abandon();
    });
    window.addEventListener("mouseup", () => {
      this.dragging = false;
    });
  }

  async startSession(): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    try {
      const taskType = el<HTMLSelectElement>("task-type").value;
      const seed = Number(el<HTMLInputElement>("seed-input").value) || 0;
      const episodes = Number(el<HTMLInputElement>("episodes-input").value) || 5;
      this.stream?.stop();
      const session = await this.client.createSession(taskType, seed, episodes);
      this.session = session;
      this.world = session.world;
      this.phase = session.phase;
      this.metrics = null;
      this.modelVersion = null;
      this.episodeShown = session.episode_index;
      this.transcriptHtml = [renderSystemHtml(episodeLine(session.episode_index, session.task))];
      this.cards = [];
      this.selections.clear();
      this.clearBanner();
      el<HTMLElement>("session-meta").textContent =
        `${session.user_id} · ${session.task_type} · ${session.episodes_total} episodes`;
      this.stream = new EventStreamClient(this.client.eventsUrl(session.session_id), {
        onPhase: () => {
          void this.syncFromState();
        },
        onRetrainingProgress: (data) => {
          this.onRetrainingProgress(data.stage, data.version, data.examples);
        },
        onStreamDown: () => {
          this.showBanner("Event stream interrupted — reconnecting…");
        },
        onStreamUp: () => {
          this.clearBanner();
        },
      });
      void this.stream.start();
      await this.syncFromState();
    } catch (err) {
      this.surfaceError(err);
    } finally {
      this.busy = false;
    }
  }

  async submitUtterance(): Promise<void> {
    const input = el<HTMLInputElement>("utterance-input");
    const text = input.value.trim();
    if (this.session === null || this.phase !== "interaction" || text === "" || this.busy) {
      return;
    }
    this.busy = true;
    try {
      const response = await this.client.sendUtterance(
        this.session.session_id,
        text,
        crypto.randomUUID(),
      );
      input.value = "";
      this.transcriptHtml.push(
        renderTurnHtml(turnFromResponse(text, this.episodeShown, response)),
      );
      if (this.world !== null) {
        this.world = applyWorldDelta(this.world, response.world_delta);
      }
      this.flashHighlights(changedIds(response.world_delta));
      this.metrics = response.metrics;
      this.phase = response.phase;
      if (response.goal_reached) {
        this.transcriptHtml.push(renderSystemHtml("Goal reached!"));
      }
      if (response.teachable !== undefined) {
        this.setCards(response.teachable);
      }
      this.clearBanner();
      this.render();
    } catch (err) {
      this.surfaceError(err);
    } finally {
      this.busy = false;
    }
  }

  async abandon(): Promise<void> {
    if (this.session === null || this.phase !== "interaction") {
      return;
    }
    try {
      await this.client.abandonEpisode(this.session.session_id);
      this.transcriptHtml.push(renderSystemHtml("Episode abandoned."));
      await this.syncFromState();
    } catch (err) {
      this.surfaceError(err);
    }
  }

  async syncFromState(): Promise<void> {
    if (this.session === null) {
      return;
    }
    try {
      const state = await this.client.getState(this.session.session_id);
      this.session = state;
      this.world = state.world;
      this.metrics = state.metrics;
      const entering = state.phase !== this.phase;
      this.phase = state.phase;
      if (state.phase === "interaction" && state.episode_index !== this.episodeShown) {
        this.episodeShown = state.episode_index;
        this.transcriptHtml.push(renderSystemHtml(episodeLine(state.episode_index, state.task)));
      }
      if (state.teachable !== undefined) {
        this.setCards(state.teachable);
      }
      if (entering && state.phase === "done") {
        this.transcriptHtml.push(renderSystemHtml("All episodes finished — session complete."));
        const final = await this.client.getMetrics(this.session.session_id);
        this.modelVersion = final.version;
        this.metrics = final;
      }
      this.clearBanner();
      this.render();
    } catch (err) {
      this.surfaceError(err);
    }
  }

  setCards(teachable: TeachableJson[]): void {
    this.cards = teachable;
    this.selections.clear();
    for (const card of teachable) {
      this.selections.set(card.turn, SpanSelection.fromCard(card));
    }
  }

  async submitTeaching(): Promise<void> {
    if (this.session === null || this.phase !== "teaching" || this.busy) {
      return;
    }
    const annotations = [];
    for (const card of this.cards) {
      const annotation = this.selections.get(card.turn)?.annotation();
      if (annotation) {
        annotations.push(annotation);
      }
    }
    this.busy = true;
    try {
      el<HTMLElement>("teach-error").textContent = "";
      const response = await this.client.submitTeaching(
        this.session.session_id,
        annotations,
        crypto.randomUUID(),
      );
      this.phase = response.phase;
      this.transcriptHtml.push(
        renderSystemHtml(
          response.accepted === 0
            ? "Nothing taught — retraining anyway."
            : `Taught ${response.accepted} new example${response.accepted === 1 ? "" : "s"}.`,
        ),
      );
      el<HTMLElement>("retrain-stages").innerHTML = "";
      this.render();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        el<HTMLElement>("teach-error").textContent = err.detail;
      } else {
        this.surfaceError(err);
      }
    } finally {
      this.busy = false;
    }
  }

  onRetrainingProgress(stage: string, version?: number, examples?: number): void {
    const list = el<HTMLElement>("retrain-stages");
    const item = document.createElement("li");
    item.textContent =
      stage === "done"
        ? `done — model v${version ?? "?"} trained on ${examples ?? "?"} examples`
        : stage;
    list.appendChild(item);
    if (stage === "done" && version !== undefined) {
      this.modelVersion = version;
    }
  }

  flashHighlights(ids: Set<string>): void {
    this.highlight = ids;
    if (this.highlightTimer !== null) {
      window.clearTimeout(this.highlightTimer);
    }
    this.highlightTimer = window.setTimeout(() => {
      this.highlight = new Set();
      this.drawWorldView();
    }, HIGHLIGHT_MS);
  }

  render(): void {
    const banner = el<HTMLElement>("phase-banner");
    banner.textContent = this.session === null ? "no session" : PHASE_LABELS[this.phase];
    banner.className = `phase-banner phase-${this.session === null ? "none" : this.phase}`;

    el<HTMLElement>("start-panel").classList.toggle("hidden", this.session !== null);
    el<HTMLElement>("session-panel").classList.toggle("hidden", this.session === null);
    if (this.session === null) {
      return;
    }

    el<HTMLElement>("task-instruction").textContent = this.session.task.instruction;
    el<HTMLElement>("episode-label").textContent =
      `Episode ${this.session.episode_index} / ${this.session.episodes_total}`;

    const transcript = el<HTMLElement>("transcript");
    transcript.innerHTML = this.transcriptHtml.join("");
    transcript.scrollTop = transcript.scrollHeight;

    el<HTMLInputElement>("utterance-input").disabled = this.phase !== "interaction";
    el<HTMLButtonElement>("utterance-send").disabled = this.phase !== "interaction";
    el<HTMLButtonElement>("abandon-button").disabled = this.phase !== "interaction";

    el<HTMLElement>("teaching-panel").classList.toggle("hidden", this.phase !== "teaching");
    if (this.phase === "teaching") {
      this.renderTeaching();
    }
    el<HTMLElement>("retraining-panel").classList.toggle("hidden", this.phase !== "retraining");

    this.drawWorldView();
    this.renderMetrics();
  }

  drawWorldView(): void {
    if (this.world === null) {
      return;
    }
    drawWorld(el<HTMLCanvasElement>("world-canvas"), this.world, {
      highlightIds: this.highlight,
    });
    el<HTMLElement>("world-hud").textContent = describeWorld(this.world);
  }

  renderMetrics(): void {
    const panel = el<HTMLElement>("metrics-panel");
    const metrics = this.metrics ?? {
      examples_taught: [],
      per_turn_complexity: [],
      normalized_episode_length: [],
    };
    const version =
      this.modelVersion === null
        ? ""
        : `<div class="model-version">model v${this.modelVersion}</div>`;
    panel.innerHTML =
      metricCharts(metrics).map((spec) => renderChartSvg(spec)).join("") + version;
  }

  renderTeaching(): void {
    const host = el<HTMLElement>("teaching-cards");
    if (this.cards.length === 0) {
      host.innerHTML = `<div class="teach-empty">No refused requests this episode.</div>`;
    } else {
      host.innerHTML = this.cards.map((card) => this.cardHtml(card)).join("");
      for (const card of this.cards) {
        this.bindCard(card);
      }
    }
    const chosen = [...this.selections.values()].filter((s) => s.annotation() !== null).length;
    el<HTMLButtonElement>("teach-submit").textContent =
      chosen === 0 ? "Skip teaching & retrain" : `Teach ${chosen} span${chosen === 1 ? "" : "s"} & retrain`;
  }

  cardHtml(card: TeachableJson): string {
    const selection = this.selections.get(card.turn) as SpanSelection;
    const chips = card.following
      .map((f, pos) => {
        const selected = selection.isSelected(pos) ? " selected" : "";
        const label = f.rendered_actions.map(escapeHtml).join(" · ");
        return `<span class="chip${selected}" data-card="${card.turn}" data-pos="${pos}" title="turn ${f.turn}: ${escapeHtml(f.utterance)}">${label}</span>`;
      })
      .join("");
    return (
      `<div class="teach-card" data-card="${card.turn}">` +
      `<div class="teach-utterance">You said: “${escapeHtml(card.utterance)}”` +
      `<span class="teach-note"> — drag over the actions that accomplished it</span></div>` +
      `<div class="chips">${chips}</div>` +
      `<button type="button" class="chip-clear" data-card="${card.turn}">Clear</button>` +
      `</div>`
    );
  }

  bindCard(card: TeachableJson): void {
    const selection = this.selections.get(card.turn) as SpanSelection;
    const root = el<HTMLElement>("teaching-cards").querySelector(
      `.teach-card[data-card="${card.turn}"]`,
    ) as HTMLElement;
    root.querySelectorAll<HTMLElement>(".chip").forEach((chip) => {
      const pos = Number(chip.dataset.pos);
      chip.addEventListener("mousedown", (e) => {
        e.preventDefault();
        this.dragging = true;
        selection.press(pos);
        this.renderTeaching();
      });
      chip.addEventListener("mouseenter", () => {
        if (this.dragging) {
          selection.extendTo(pos);
          this.renderTeaching();
        }
      });
    });
    (root.querySelector(".chip-clear") as HTMLElement).addEventListener("click", () => {
      selection.clear();
      this.renderTeaching();
    });
  }

  surfaceError(err: unknown): void {
    if (err instanceof ApiError && err.status === 0) {
      this.showBanner("Cannot reach the server — is it running?");
    } else if (err instanceof ApiError) {
      this.showBanner(err.message);
    } else {
      this.showBanner(String(err));
    }
  }

  showBanner(text: string): void {
    const banner = el<HTMLElement>("connectivity");
    banner.textContent = text;
    banner.classList.remove("hidden");
  }

  clearBanner(): void {
    el<HTMLElement>("connectivity").classList.add("hidden");
  }
}

function episodeLine(index: number, task: TaskJson): string {
  return `Episode ${index}: ${task.instruction}`;
}

const app = new App();
app.bind();
el<HTMLButtonElement>("teach-submit").addEventListener("click", () => {
  void app.submitTeaching();
});
