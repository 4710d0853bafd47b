import { HttpTransport } from "./api.js";
import { BoardView } from "./board.js";
import { GameController } from "./controller.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}

let board: BoardView;
const controller = new GameController(new HttpTransport(""), (view) => board.render(view));
board = new BoardView(root, {
  onSquare: (x, y) => void controller.clickSquare(x, y),
  onWhiteBase: () => void controller.clickWhiteBase(),
  onBlackBase: () => void controller.clickBlackBase(),
  onRetry: () => void controller.retry(),
});

void controller.start();
