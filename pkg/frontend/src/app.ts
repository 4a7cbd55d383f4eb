/**
 * Labeling console: create a session, label query batches, watch the query
 * mix and the learning curve evolve.
 *
 * Framework-free by design.  The DOM is the only state the user sees, the
 * service is the only source of numbers (charts re-render from /metrics
 * after every submission), and every user action funnels through a single
 * serialized task queue so tests can `await app.settle()`.
 */
import {
  ApiError,
  Client,
  type BatchItem,
  type BatchView,
  type FetchLike,
  type FractionTriple,
  type MetricsView,
  type SessionRequest,
  type SessionSummary,
} from "./api.js";
import { fractionChart, learningCurveChart } from "./charts.js";

export const METHOD_IDS = [
  "jas.main",
  "jas.basic",
  "jas.anom",
  "jas.uncert",
  "jas.rand",
  "ala.main-lite",
] as const;

export interface AppOptions {
  baseUrl?: string;
  fetchImpl?: FetchLike;
  client?: Client;
}

const SETUP_HTML = `
<section class="panel" data-role="setup">
  <h2>New session</h2>
  <div class="field-grid">
    <label>dataset
      <select data-field="kind">
        <option value="synthetic">synthetic</option>
        <option value="synthetic-shifted">synthetic-shifted</option>
        <option value="csv">csv</option>
      </select>
    </label>
    <label data-for-kind="synthetic synthetic-shifted">rows
      <input data-field="rows" type="number" value="500" min="10">
    </label>
    <label data-for-kind="csv" hidden>csv path
      <input data-field="path" type="text" placeholder="data/flows.csv">
    </label>
    <label data-for-kind="csv" hidden>label column
      <input data-field="label-column" type="text" value="label">
    </label>
    <label>start labeled
      <input data-field="labeled0" type="number" value="50" min="2">
    </label>
    <label>evaluation rows
      <input data-field="eval" type="number" value="100" min="0">
    </label>
    <label>batch size Q
      <input data-field="q" type="number" value="10" min="2">
    </label>
    <label>label budget
      <input data-field="total" type="number" value="30" min="2">
    </label>
    <label>method
      <select data-field="method">
        ${METHOD_IDS.map((m) => `<option${m === "jas.main" ? " selected" : ""}>${m}</option>`).join("")}
      </select>
    </label>
    <label>seed
      <input data-field="seed" type="number" value="0">
    </label>
  </div>
  <details>
    <summary>advanced (JSON)</summary>
    <textarea data-field="advanced" rows="4"
      placeholder='{"gbm": {"ntrees": 25}, "k_folds": 3}'></textarea>
  </details>
  <button data-action="create">Create session</button>
</section>`;

const WORK_HTML = `
<section class="panel" data-role="work" hidden>
  <div class="status-line" data-role="session-line"></div>
  <div class="work-columns">
    <div class="batch-pane">
      <h2 data-role="batch-title"></h2>
      <div class="progress" data-role="progress"></div>
      <table class="batch-table">
        <thead>
          <tr><th>#</th><th>picked as</th><th>score</th><th>stands out</th><th>label</th></tr>
        </thead>
        <tbody data-role="batch-body"></tbody>
      </table>
      <button data-action="submit" disabled>Submit labels</button>
    </div>
    <div class="charts-pane">
      <figure>
        <figcaption>query mix per round</figcaption>
        <div data-role="fraction-chart"></div>
        <div class="next-mix" data-role="next-mix"></div>
      </figure>
      <figure>
        <figcaption>evaluation F1</figcaption>
        <div data-role="curve-chart"></div>
      </figure>
    </div>
  </div>
</section>`;

function pickUnusual(item: BatchItem, k = 3): string {
  return item.features
    .map((f) => ({ f, dev: Math.abs(f.percentile - 0.5) }))
    .sort((a, b) => b.dev - a.dev)
    .slice(0, k)
    .map(({ f }) => `${f.name} p${Math.round(f.percentile * 100)}`)
    .join(", ");
}

function badgeSpans(item: BatchItem): string {
  const badges: string[] = [];
  if (item.anomalous) badges.push("anomalous");
  if (item.uncertain) badges.push("uncertain");
  if (item.anomalous && item.uncertain) badges.push("dual");
  if (item.random) badges.push("random");
  return badges.map((b) => `<span class="badge badge-${b}">${b}</span>`).join(" ");
}

export class App {
  readonly client: Client;
  sessionId: string | null = null;
  private session: SessionSummary | null = null;
  private batch: BatchView | null = null;
  private metrics: MetricsView | null = null;
  private nextMix: FractionTriple | null = null;
  private readonly picked = new Map<string, 0 | 1>();
  private queue: Promise<void> = Promise.resolve();
  private pendingTasks = 0;

  constructor(
    private readonly root: HTMLElement,
    opts: AppOptions = {},
  ) {
    this.client = opts.client ?? new Client(opts.baseUrl ?? "", opts.fetchImpl);
    root.classList.add("dynaq-app");
    root.innerHTML = `
      <header><h1>dynaq labeling console</h1></header>
      <div class="banner" data-role="banner" hidden></div>
      ${SETUP_HTML}
      ${WORK_HTML}`;
    this.el("[data-field=kind]").addEventListener("change", () => this.syncKindFields());
    this.el("[data-action=create]").addEventListener("click", () =>
      this.enqueue(() => this.createSession()),
    );
    this.el("[data-action=submit]").addEventListener("click", () =>
      this.enqueue(() => this.submitLabels()),
    );
  }

  /** Resolves once every queued action (including ones enqueued meanwhile) is done. */
  async settle(): Promise<void> {
    while (this.pendingTasks > 0) await this.queue;
  }

  private enqueue(task: () => Promise<void>): void {
    this.pendingTasks += 1;
    this.queue = this.queue
      .then(task)
      .catch((err: unknown) => this.showError(err))
      .finally(() => {
        this.pendingTasks -= 1;
      });
  }

  private el<T extends HTMLElement = HTMLElement>(selector: string): T {
    const found = this.root.querySelector<T>(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found;
  }

  private field(name: string): HTMLInputElement {
    return this.el<HTMLInputElement>(`[data-field=${JSON.stringify(name)}]`);
  }

  private syncKindFields(): void {
    const kind = this.field("kind").value;
    for (const label of this.root.querySelectorAll<HTMLElement>("[data-for-kind]")) {
      const kinds = (label.getAttribute("data-for-kind") ?? "").split(" ");
      label.hidden = !kinds.includes(kind);
    }
  }

  private showError(err: unknown): void {
    const banner = this.el("[data-role=banner]");
    banner.hidden = false;
    if (err instanceof ApiError) {
      banner.textContent = `${err.code}: ${err.message}`;
      // someone else advanced or closed the session; resync our view
      if (err.code === "wrong_status") this.enqueue(() => this.refresh());
    } else {
      banner.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  private clearError(): void {
    const banner = this.el("[data-role=banner]");
    banner.hidden = true;
    banner.textContent = "";
  }

  private intField(name: string): number {
    const raw = this.field(name).value.trim();
    const value = Number(raw);
    if (!Number.isInteger(value)) throw new Error(`${name} must be an integer, got "${raw}"`);
    return value;
  }

  buildRequest(): SessionRequest {
    const kind = this.field("kind").value;
    const seed = this.intField("seed");
    let dataset: Record<string, unknown>;
    if (kind === "csv") {
      dataset = {
        kind,
        path: this.field("path").value.trim(),
        label_column: this.field("label-column").value.trim() || "label",
      };
    } else if (kind === "synthetic-shifted") {
      dataset = { kind, n_pool: this.intField("rows"), n_eval: this.intField("eval"), seed };
    } else {
      dataset = { kind, n_rows: this.intField("rows"), seed };
    }
    const request: SessionRequest = {
      dataset,
      labeled0: this.intField("labeled0"),
      eval_size: kind === "synthetic-shifted" ? 0 : this.intField("eval"),
      query_size: this.intField("q"),
      total_queries: this.intField("total"),
      method: this.field("method").value,
      seed,
    };
    const advanced = this.field("advanced").value.trim();
    if (advanced) Object.assign(request, JSON.parse(advanced) as Record<string, unknown>);
    return request;
  }

  private async createSession(): Promise<void> {
    this.clearError();
    const summary = await this.client.createSession(this.buildRequest());
    this.sessionId = summary.id;
    this.session = summary;
    this.el("[data-role=setup]").hidden = true;
    this.el("[data-role=work]").hidden = false;
    await this.refresh();
  }

  /** Pull session + metrics (+ pending batch) and redraw everything. */
  private async refresh(): Promise<void> {
    if (!this.sessionId) return;
    this.session = await this.client.getSession(this.sessionId);
    this.metrics = await this.client.getMetrics(this.sessionId);
    if (this.session.status === "awaiting_labels") {
      const batch = await this.client.getBatch(this.sessionId);
      if (this.batch?.t !== batch.t) this.picked.clear();
      this.batch = batch;
    } else {
      this.batch = null;
      this.picked.clear();
    }
    this.render();
  }

  private async submitLabels(): Promise<void> {
    if (!this.sessionId || !this.batch) return;
    if (this.picked.size !== this.batch.items.length) return; // gated by the button anyway
    this.clearError();
    const labels: Record<string, 0 | 1> = {};
    for (const [id, v] of this.picked) labels[id] = v;
    const result = await this.client.submitLabels(this.sessionId, labels);
    this.nextMix = result.next_fractions;
    this.picked.clear();
    this.batch = null;
    await this.refresh();
  }

  private pick(id: string, value: 0 | 1): void {
    this.picked.set(id, value);
    this.renderGate();
    const row = this.root.querySelector(`tr[data-item=${JSON.stringify(id)}]`);
    if (!row) return;
    row.querySelector("[data-action=benign]")?.classList.toggle("selected", value === 0);
    row.querySelector("[data-action=malicious]")?.classList.toggle("selected", value === 1);
  }

  // -- rendering ------------------------------------------------------------

  private render(): void {
    this.renderSessionLine();
    this.renderBatch();
    this.renderCharts();
  }

  private renderSessionLine(): void {
    const s = this.session;
    if (!s) return;
    this.el("[data-role=session-line]").textContent =
      `session ${s.id.slice(0, 8)} | ${s.method} | round ${s.t} of ${s.total_iterations}` +
      ` | labeled ${s.labeled_size} | status ${s.status}`;
  }

  private renderBatch(): void {
    const body = this.el("[data-role=batch-body]");
    const title = this.el("[data-role=batch-title]");
    const submit = this.el<HTMLButtonElement>("[data-action=submit]");
    body.innerHTML = "";
    if (!this.batch) {
      const finished = this.session?.status === "finished";
      title.textContent = finished ? "session finished" : "training...";
      submit.hidden = true;
      this.el("[data-role=progress]").textContent = "";
      return;
    }
    title.textContent = `batch for round ${this.batch.t}`;
    submit.hidden = false;
    this.batch.items.forEach((item, i) => {
      const tr = this.root.ownerDocument.createElement("tr");
      tr.setAttribute("data-item", item.id);
      tr.setAttribute("data-yhat", String(item.y_hat));
      tr.innerHTML = `
        <td>${i + 1}</td>
        <td>${badgeSpans(item)}</td>
        <td title="model score ${item.y_hat}">${item.y_hat.toFixed(3)}</td>
        <td class="features">${pickUnusual(item)}</td>
        <td>
          <button data-action="benign">benign</button>
          <button data-action="malicious">malicious</button>
        </td>`;
      tr.querySelector("[data-action=benign]")!.addEventListener("click", () =>
        this.pick(item.id, 0),
      );
      tr.querySelector("[data-action=malicious]")!.addEventListener("click", () =>
        this.pick(item.id, 1),
      );
      body.appendChild(tr);
    });
    this.renderGate();
  }

  private renderGate(): void {
    if (!this.batch) return;
    const total = this.batch.items.length;
    this.el("[data-role=progress]").textContent = `${this.picked.size} / ${total} labeled`;
    // submitting anything less than the full batch is rejected server-side
    this.el<HTMLButtonElement>("[data-action=submit]").disabled = this.picked.size !== total;
  }

  private renderCharts(): void {
    if (!this.metrics) return;
    const doc = this.root.ownerDocument;
    const fractions = this.el("[data-role=fraction-chart]");
    fractions.innerHTML = "";
    fractions.appendChild(fractionChart(doc, this.metrics.iterations));
    const curve = this.el("[data-role=curve-chart]");
    curve.innerHTML = "";
    curve.appendChild(
      learningCurveChart(doc, this.metrics.iterations, this.metrics.baseline_f1, this.metrics.current),
    );
    const mix = this.el("[data-role=next-mix]");
    if (this.nextMix && this.session?.status === "awaiting_labels") {
      mix.setAttribute("data-anomalous", String(this.nextMix.anomalous));
      mix.setAttribute("data-uncertain", String(this.nextMix.uncertain));
      mix.setAttribute("data-random", String(this.nextMix.random));
      mix.textContent =
        `next batch mix: anomalous ${this.nextMix.anomalous.toFixed(3)}, ` +
        `uncertain ${this.nextMix.uncertain.toFixed(3)}, random ${this.nextMix.random.toFixed(3)}`;
    } else {
      mix.textContent = "";
    }
  }
}

export function mountApp(root: HTMLElement, opts: AppOptions = {}): App {
  return new App(root, opts);
}
