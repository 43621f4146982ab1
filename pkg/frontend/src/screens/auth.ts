import { AppState } from "../state.js";
import { guarded, toast } from "../toast.js";

const TERMS = `drivelab collects motion, location, health, video, and vehicle
telemetry while you drive, strictly per the consent you grant per
category. Data is encrypted at rest and used for driving research only.`;

/** Registration -> confirmation code -> login, behind a terms gate. */
export function renderAuth(container: HTMLElement, state: AppState, onLogin: () => void): void {
  const doc = container.ownerDocument;
  container.innerHTML = `
    <section class="card">
      <h2>Terms of service</h2>
      <pre class="terms">${TERMS}</pre>
      <label><input type="checkbox" id="agree-terms"> I agree to the terms of service</label>
    </section>
    <section class="card">
      <h2>Register</h2>
      <input id="reg-email" type="email" placeholder="email">
      <input id="reg-password" type="password" placeholder="password (8+ chars)">
      <button id="register-btn" disabled>Register</button>
    </section>
    <section class="card">
      <h2>Confirm</h2>
      <p>Enter the 6-digit confirmation code sent to your email.</p>
      <input id="confirm-code" inputmode="numeric" placeholder="123456">
      <button id="confirm-btn">Confirm</button>
    </section>
    <section class="card">
      <h2>Login</h2>
      <input id="login-email" type="email" placeholder="email">
      <input id="login-password" type="password" placeholder="password">
      <button id="login-btn">Login</button>
    </section>`;

  const agree = container.querySelector<HTMLInputElement>("#agree-terms")!;
  const registerBtn = container.querySelector<HTMLButtonElement>("#register-btn")!;
  agree.addEventListener("change", () => {
    registerBtn.disabled = !agree.checked;
  });

  registerBtn.addEventListener("click", async () => {
    const email = container.querySelector<HTMLInputElement>("#reg-email")!.value;
    const password = container.querySelector<HTMLInputElement>("#reg-password")!.value;
    const result = await guarded(() => state.server.register(email, password), "registration");
    if (result) {
      state.email = email;
      const login = container.querySelector<HTMLInputElement>("#login-email")!;
      login.value = email;
      toast("registered; check your email for the confirmation code", "info");
    }
  });

  container.querySelector<HTMLButtonElement>("#confirm-btn")!.addEventListener("click", async () => {
    const code = container.querySelector<HTMLInputElement>("#confirm-code")!.value;
    const email = state.email || container.querySelector<HTMLInputElement>("#reg-email")!.value;
    const result = await guarded(() => state.server.confirm(email, code), "confirmation");
    if (result) toast("account confirmed; you can log in now", "info");
  });

  container.querySelector<HTMLButtonElement>("#login-btn")!.addEventListener("click", async () => {
    const email = container.querySelector<HTMLInputElement>("#login-email")!.value;
    const password = container.querySelector<HTMLInputElement>("#login-password")!.value;
    const token = await guarded(() => state.server.login(email, password), "login");
    if (token) {
      state.email = email;
      onLogin();
    }
  });
}
