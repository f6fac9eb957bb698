import { httpTransport } from "./api.js";
import { ConsoleApp } from "./console.js";

const root = document.getElementById("app");
if (!root) throw new Error("console markup missing #app");

const app = new ConsoleApp(root, httpTransport(""));
void app.start();
