package shop;

// 在庫同期のバッチ処理を実行する
// 夜間に全店舗の在庫を反映する
public class Zk001Batch {
    private int zk1;
    private int zk2;

    // 同期に失敗した場合は次の周期で再試行
    public void run() {
        for (int i = 0; i < zk1; i++) {
            step(i);
        }
    }

    private void step(int n) {
        /* 店舗ごとの在庫を順に処理 */
        zk2 = n;
    }
}
