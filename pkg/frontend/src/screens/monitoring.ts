import { AppState } from "../state.js";
import { guarded } from "../toast.js";

const POLL_MS = 1000; // live labels refresh at >= 1 Hz

/** Record button plus live labels: heart rate, vehicle speed,
 * acceleration-z, OBD connection status. While recording, the preview
 * area shows a static cover instead of any video. */
export function renderMonitoring(container: HTMLElement, state: AppState): () => void {
  container.innerHTML = `
    <section class="card">
      <div id="preview" class="preview">camera preview</div>
      <div class="live-labels">
        <div class="label-block" id="block-heart"><span class="label-name">heart rate</span>
          <span class="label-value" id="label-heart">–</span></div>
        <div class="label-block"><span class="label-name">vehicle speed</span>
          <span class="label-value" id="label-speed">–</span></div>
        <div class="label-block"><span class="label-name">acceleration z</span>
          <span class="label-value" id="label-accel">–</span></div>
        <div class="label-block"><span class="label-name">OBD status</span>
          <span class="label-value" id="label-obd">–</span></div>
        <div class="label-block"><span class="label-name">elapsed</span>
          <span class="label-value" id="label-elapsed">–</span></div>
      </div>
      <button id="record-btn" class="record">Start recording</button>
      <div id="monitor-warnings" class="warnings"></div>
    </section>`;

  const recordBtn = container.querySelector<HTMLButtonElement>("#record-btn")!;
  const preview = container.querySelector<HTMLElement>("#preview")!;
  const heartBlock = container.querySelector<HTMLElement>("#block-heart")!;
  let recording = false;

  const applyConsent = () => {
    heartBlock.style.display = state.consent.health ? "" : "none";
  };
  state.onConsentChange.push(applyConsent);
  applyConsent();

  const set = (id: string, text: string) => {
    const el = container.querySelector<HTMLElement>(id);
    if (el) el.textContent = text;
  };

  const refresh = async () => {
    const status = await guarded(() => state.agent.status(), "status poll");
    if (!status || !container.isConnected) return;
    recording = status.recording;
    recordBtn.textContent = recording ? "Stop recording" : "Start recording";
    preview.className = recording ? "preview covered" : "preview";
    preview.textContent = recording ? "recording — preview covered" : "camera preview";
    set("#label-heart", status.heartRate ? `${status.heartRate.value.toFixed(0)} bpm` : "–");
    set("#label-speed", status.vehicleSpeed ? `${status.vehicleSpeed.value.toFixed(0)} km/h` : "–");
    set("#label-accel", status.accelerationZ ? `${status.accelerationZ.value.toFixed(3)} g` : "–");
    set("#label-obd", status.obdState);
    set("#label-elapsed", recording ? `${(status.elapsedMs / 1000).toFixed(0)} s` : "–");
    const warnings = container.querySelector<HTMLElement>("#monitor-warnings")!;
    warnings.textContent = status.warnings.join("; ");
  };

  recordBtn.addEventListener("click", async () => {
    if (recording) {
      await guarded(() => state.agent.stopRecording(), "stop recording");
    } else {
      await guarded(
        () => state.agent.startRecording(state.consent, state.liveUpload),
        "start recording",
      );
    }
    await refresh();
  });

  void refresh();
  const timer = setInterval(refresh, POLL_MS);
  return () => clearInterval(timer);
}
