// Browser bootstrap: wires the form, the live round feed, the voxel scene,
// and (for master tokens) the dashboard onto the page. All game truth comes
// from service payloads; this file only moves data into the DOM.

import { ApiClient } from "./api.js";
import { masterDashboard } from "./dashboard.js";
import { canSubmit, previewNormalized, submissionPayload, validationMessage } from "./decisionForm.js";
import type { FormState } from "./decisionForm.js";
import { SseParser, eventStreamPath } from "./sse.js";
import { RoundFeed, diffIsEmpty, gainSeries, scoreSeries, voxelDiff } from "./roundView.js";
import { orthographicScene, sceneBounds } from "./voxelScene.js";
import type { Snapshot, VoxelRecord } from "./types.js";

const COLOUR_PALETTE = ["#c25b4e", "#4e7fc2", "#c2a94e", "#5ec24e", "#8d8d8d", "#7a4ec2"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

class App {
  private client: ApiClient;
  private form: FormState = { interests: [], weights: [], comment: "" };
  private feed: RoundFeed | null = null;
  private lastVoxels: VoxelRecord[] | null = null;

  constructor(
    private root: HTMLElement,
    private base: string,
    private gameId: string,
    token: string,
  ) {
    this.client = new ApiClient(base, token);
  }

  async start(): Promise<void> {
    const snapshot = await this.client.getState(this.gameId);
    this.feed = new RoundFeed(snapshot.actors);
    this.form = {
      interests: snapshot.sites.map(() => snapshot.colours.map(() => 1 / snapshot.sites.length)),
      weights: snapshot.criteria.map(() => 1 / snapshot.criteria.length),
      comment: "",
    };
    this.render(snapshot);
    this.subscribe();
  }

  private subscribe(): void {
    const parser = new SseParser();
    const connect = async (): Promise<void> => {
      const response = await fetch(
        `${this.base}${eventStreamPath(this.gameId, parser.lastEventId)}`,
        { headers: { Authorization: `Bearer ${(this.client as never as { token: string }).token}` } },
      );
      const reader = response.body?.getReader();
      if (!reader) return;
      const decoder = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
          this.feed?.apply(event);
          if (event.event === "ROUND_COMPLETE") await this.refresh();
        }
      }
      // stream ended: show the reconnect banner and resume from the last id
      if (this.feed) this.feed.connectionLost = true;
      setTimeout(() => void connect(), 1000);
    };
    void connect();
  }

  private async refresh(): Promise<void> {
    const snapshot = await this.client.getState(this.gameId);
    if (snapshot.round > 0) {
      const view = await this.client.getRound(this.gameId, snapshot.round - 1);
      const diff = voxelDiff(this.lastVoxels, view.voxels);
      this.lastVoxels = view.voxels;
      this.drawScene(view.voxels, diffIsEmpty(diff) ? "unchanged massing" : `${diff.added.length} added / ${diff.removed.length} removed / ${diff.recoloured.length} recoloured`);
    }
    this.render(snapshot);
  }

  private render(snapshot: Snapshot): void {
    this.root.replaceChildren();
    const status = el("p", {}, `${snapshot.name} - round ${snapshot.round} (${snapshot.phase}), ${snapshot.pending_count}/${snapshot.actor_count} decisions in`);
    if (this.feed?.connectionLost) {
      status.append(el("strong", {}, " [reconnecting...]"));
    }
    this.root.append(status);
    this.renderForm(snapshot);
    this.renderCharts(snapshot);
    this.renderBadges();
    void this.renderDashboard();
  }

  private renderForm(snapshot: Snapshot): void {
    const section = el("section");
    section.append(el("h2", {}, "your decision"));
    const grid = el("table");
    snapshot.sites.forEach((site, j) => {
      const row = el("tr");
      row.append(el("th", {}, site));
      snapshot.colours.forEach((_, k) => {
        const cell = el("td");
        const slider = el("input", {
          type: "range", min: "0", max: "1", step: "0.01",
          value: String(this.form.interests[j][k]),
        });
        slider.addEventListener("input", () => {
          this.form.interests[j][k] = Number(slider.value);
          this.updatePreview(section);
        });
        cell.append(slider);
        row.append(cell);
      });
      grid.append(row);
    });
    section.append(grid);
    const comment = el("textarea", { placeholder: "motivate your decision" });
    comment.addEventListener("input", () => (this.form.comment = comment.value));
    section.append(comment);
    const submit = el("button", {}, "submit decision");
    submit.addEventListener("click", () => void this.submit(section));
    section.append(submit);
    section.append(el("p", { class: "preview" }));
    this.updatePreview(section);
    this.root.append(section);
  }

  private updatePreview(section: HTMLElement): void {
    const message = validationMessage(this.form);
    const button = section.querySelector("button");
    if (button) button.toggleAttribute("disabled", !canSubmit(this.form));
    const preview = section.querySelector(".preview");
    if (preview) {
      const normalized = previewNormalized(this.form);
      preview.textContent = message ?? `preview: ${JSON.stringify(normalized?.map((r) => r.map((v) => Number(v.toFixed(3)))))}`;
    }
  }

  private async submit(section: HTMLElement): Promise<void> {
    try {
      await this.client.submitDecision(this.gameId, submissionPayload(this.form));
      section.append(el("p", {}, "submitted - waiting for the other players"));
    } catch (err) {
      section.append(el("p", { class: "error" }, String(err)));
    }
  }

  private renderCharts(snapshot: Snapshot): void {
    if (snapshot.score_history.length === 0) return;
    const section = el("section");
    section.append(el("h2", {}, "scores"));
    for (const series of [...scoreSeries(snapshot), ...gainSeries(snapshot)]) {
      const line = series.values.map((v) => v.toFixed(3)).join(" -> ");
      section.append(el("p", {}, `${series.name}: ${line}`));
    }
    this.root.append(section);
  }

  private renderBadges(): void {
    if (!this.feed || this.feed.banners.length === 0) return;
    const section = el("section");
    section.append(el("h2", {}, "badges"));
    for (const banner of this.feed.banners.slice(-3)) {
      section.append(
        el(
          "p",
          {},
          `round ${banner.round}: gainer ${banner.gainer}, player ${banner.player ?? "-"}, contributor ${banner.contributor ?? "-"}`,
        ),
      );
    }
    this.root.append(section);
  }

  private drawScene(voxels: VoxelRecord[], caption: string): void {
    const canvas = el("canvas", { width: "640", height: "420" });
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const cells = orthographicScene(voxels, 10);
    const bounds = sceneBounds(cells);
    const offsetX = 320 - (bounds.minX + bounds.maxX) / 2;
    const offsetY = 210 - (bounds.minY + bounds.maxY) / 2;
    for (const cell of cells) {
      ctx.fillStyle = COLOUR_PALETTE[cell.colour % COLOUR_PALETTE.length];
      ctx.fillRect(cell.x + offsetX, cell.y + offsetY, 9, 9);
      ctx.strokeStyle = "#222";
      ctx.strokeRect(cell.x + offsetX, cell.y + offsetY, 9, 9);
    }
    const section = el("section");
    section.append(el("h2", {}, "massing"), canvas, el("p", {}, caption));
    this.root.append(section);
  }

  private async renderDashboard(): Promise<void> {
    const report = await this.client.getAnalytics(this.gameId);
    const dash = masterDashboard(report);
    if (!dash.visible) return;
    const section = el("section");
    section.append(el("h2", {}, "game master dashboard"), el("p", {}, dash.levene ?? ""));
    const table = el("table");
    const head = el("tr");
    dash.anova?.header.forEach((h) => head.append(el("th", {}, h)));
    table.append(head);
    dash.anova?.rows.forEach((cells) => {
      const row = el("tr");
      cells.forEach((c) => row.append(el("td", {}, c === null ? "-" : String(c))));
      table.append(row);
    });
    section.append(table);
    this.root.append(section);
  }
}

if (typeof document !== "undefined") {
  const params = new URLSearchParams(window.location.search);
  const root = document.getElementById("app");
  const gameId = params.get("game");
  const token = params.get("token");
  if (root && gameId && token) {
    void new App(root, "", gameId, token).start();
  } else if (root) {
    root.textContent = "open with ?game=<id>&token=<your token>";
  }
}
