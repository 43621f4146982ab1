import { Consent } from "../api.js";
import { AppState } from "../state.js";
import { guarded, toast } from "../toast.js";

const CATEGORIES: (keyof Consent)[] = ["motion", "location", "health", "video", "vehicle"];

/** Frame-rate / frequency sliders, automatic-upload toggle (persisted via
 * the agent), and per-category consent switches (pushed to the server and
 * applied to the next recording). */
export function renderSettings(container: HTMLElement, state: AppState): () => void {
  container.innerHTML = `
    <section class="card">
      <h2>Recording settings</h2>
      <label>frame rate <span id="framerate-value"></span>
        <input id="framerate" type="range" min="1" max="60" step="1"></label>
      <label>motion frequency (Hz) <span id="frequency-value"></span>
        <input id="frequency" type="range" min="0.1" max="100" step="0.1"></label>
      <label><input id="auto-upload" type="checkbox"> automatic upload after recording</label>
      <button id="save-settings">Set new value</button>
    </section>
    <section class="card">
      <h2>Consent</h2>
      <div id="consent-boxes">
        ${CATEGORIES.map(
          (c) => `<label><input type="checkbox" data-category="${c}"> ${c}</label>`,
        ).join("")}
      </div>
      <button id="save-consent">Apply consent</button>
    </section>`;

  const framerate = container.querySelector<HTMLInputElement>("#framerate")!;
  const frequency = container.querySelector<HTMLInputElement>("#frequency")!;
  const autoUpload = container.querySelector<HTMLInputElement>("#auto-upload")!;
  const framerateValue = container.querySelector<HTMLElement>("#framerate-value")!;
  const frequencyValue = container.querySelector<HTMLElement>("#frequency-value")!;

  const showValues = () => {
    framerateValue.textContent = `${framerate.value} fps`;
    frequencyValue.textContent = `${frequency.value} Hz`;
  };
  framerate.addEventListener("input", showValues);
  frequency.addEventListener("input", showValues);

  void (async () => {
    const settings = await guarded(() => state.agent.settings(), "load settings");
    if (!settings) return;
    framerate.value = String(settings.frameRate);
    frequency.value = String(settings.frequency);
    autoUpload.checked = settings.automaticUpload;
    showValues();
  })();

  container.querySelector<HTMLButtonElement>("#save-settings")!.addEventListener("click", async () => {
    const saved = await guarded(
      () =>
        state.agent.saveSettings({
          frameRate: Number(framerate.value),
          frequency: Number(frequency.value),
          automaticUpload: autoUpload.checked,
        }),
      "save settings",
    );
    if (saved) toast("settings saved", "info");
  });

  const boxes = CATEGORIES.map((c) => container.querySelector<HTMLInputElement>(`[data-category="${c}"]`)!);
  boxes.forEach((box, i) => (box.checked = state.consent[CATEGORIES[i]]));

  container.querySelector<HTMLButtonElement>("#save-consent")!.addEventListener("click", async () => {
    const consent = Object.fromEntries(
      CATEGORIES.map((c, i) => [c, boxes[i].checked]),
    ) as unknown as Consent;
    state.setConsent(consent);
    if (state.authenticated) {
      await guarded(() => state.server.setConsent(consent), "save consent");
    }
    toast("consent updated; applies to the next recording", "info");
  });

  return () => undefined;
}
