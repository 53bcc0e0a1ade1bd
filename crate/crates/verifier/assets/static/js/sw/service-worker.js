// SPDX-License-Identifier: Apache-2.0
// Default background script. Shows Verifier push messages after checking
// their signature against the Verifier's published push key.

function b64urlDecode(text) {
  const b64 = text.replace(/-/g, "+").replace(/_/g, "/");
  const raw = atob(b64 + "=".repeat((4 - (b64.length % 4)) % 4));
  return Uint8Array.from(raw, (c) => c.charCodeAt(0));
}

async function verifierKey() {
  const res = await fetch("/api/config/subscription");
  const { public_key } = await res.json();
  return crypto.subtle.importKey(
    "raw",
    b64urlDecode(public_key),
    { name: "ECDSA", namedCurve: "P-256" },
    false,
    ["verify"],
  );
}

async function handle(message) {
  const key = await verifierKey();
  const ok = await crypto.subtle.verify(
    { name: "ECDSA", hash: "SHA-256" },
    key,
    b64urlDecode(message.signature),
    new TextEncoder().encode(message.payload),
  );
  if (!ok) return;
  const body = JSON.parse(message.payload);
  let title = "Verifier notice";
  let text = body.message || "";
  if (body.kind === "violation") {
    title = "TA violation: " + body.domain;
    text = "Violation " + body.violation_id + " at log index " + body.offending_log_index;
  } else if (body.kind === "reregistered") {
    title = "TA re-registered: " + body.domain;
    text = "New reference value " + body.new_rv;
  }
  await self.registration.showNotification(title, { body: text });
}

self.addEventListener("push", (event) => {
  if (!event.data) return;
  event.waitUntil(handle(event.data.json()));
});
