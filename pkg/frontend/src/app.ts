import { ApiClient } from "./api.js";
import { Router } from "./router.js";

const root = document.getElementById("app");
if (root) {
  const client = new ApiClient();
  const router = new Router(client, root);
  void router.start();
}
