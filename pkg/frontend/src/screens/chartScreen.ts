import { prepareSeries, renderChartSvg } from "../chart.js";
import { AppState, formatWhen } from "../state.js";
import { guarded } from "../toast.js";

const FIELDS = [
  "accelerationZ",
  "accelerationX",
  "accelerationY",
  "gyroDataX",
  "gyroDataY",
  "gyroDataZ",
  "pitchData",
  "rollData",
  "yawData",
];

/** Line chart of a chosen motion field for an uploaded session; the
 * downsample target follows the viewport width. */
export function renderChart(container: HTMLElement, state: AppState): () => void {
  container.innerHTML = `
    <section class="card">
      <h2>Charts</h2>
      <div class="chart-controls">
        <select id="chart-session"></select>
        <select id="chart-field">${FIELDS.map((f) => `<option>${f}</option>`).join("")}</select>
        <button id="chart-load">Load</button>
      </div>
      <div id="chart-holder" class="chart-holder"><p>no data loaded</p></div>
    </section>`;

  const sessionPick = container.querySelector<HTMLSelectElement>("#chart-session")!;
  const fieldPick = container.querySelector<HTMLSelectElement>("#chart-field")!;
  const holder = container.querySelector<HTMLElement>("#chart-holder")!;

  const loadSessions = async () => {
    const result = await guarded(() => state.server.sessions(), "list uploaded sessions");
    if (!result || !container.isConnected) return;
    sessionPick.innerHTML = "";
    for (const manifest of result.sessions) {
      const opt = container.ownerDocument.createElement("option");
      opt.value = manifest.sessionId;
      opt.textContent = `${formatWhen(manifest.createdAt)} (${manifest.sessionId.slice(0, 8)})`;
      sessionPick.appendChild(opt);
    }
  };

  const draw = async () => {
    const sessionId = sessionPick.value;
    if (!sessionId) return;
    const width = Math.max(320, holder.clientWidth || 800);
    const target = width; // one candidate point per viewport pixel
    const series = await guarded(
      () => state.server.series(sessionId, "motion", target, fieldPick.value),
      "load series",
    );
    if (!series || !container.isConnected) return;
    const points = prepareSeries(series.points, target);
    holder.innerHTML = "";
    holder.appendChild(renderChartSvg(container.ownerDocument, points, width, 320));
    const caption = container.ownerDocument.createElement("p");
    caption.className = "chart-caption";
    caption.id = "chart-caption";
    caption.textContent = `${series.field}: ${points.length} points`;
    holder.appendChild(caption);
  };

  container.querySelector<HTMLButtonElement>("#chart-load")!.addEventListener("click", draw);
  void loadSessions();
  return () => undefined;
}
