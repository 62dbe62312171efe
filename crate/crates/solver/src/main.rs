//! SMT-LIB2 solver process: reads commands from stdin, answers on stdout.

use std::io::{Read, Write};

use qinv_solver::{Engine, Reader};

fn main() {
    let mut engine = Engine::new();
    let mut reader = Reader::new();
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let mut chunk = [0u8; 8192];
    let mut handle = stdin.lock();
    loop {
        let n = match handle.read(&mut chunk) {
            Ok(0) => return,
            Ok(n) => n,
            Err(_) => return,
        };
        reader.push_str(&String::from_utf8_lossy(&chunk[..n]));
        loop {
            match reader.next_form() {
                Ok(Some(form)) => {
                    let is_exit = form.list().and_then(|l| l.first()).and_then(|s| s.atom())
                        == Some("exit");
                    if let Some(resp) = engine.handle(&form) {
                        let _ = writeln!(stdout, "{resp}");
                        let _ = stdout.flush();
                    }
                    if is_exit {
                        return;
                    }
                }
                Ok(None) => break,
                Err(msg) => {
                    let _ = writeln!(stdout, "(error \"{msg}\")");
                    let _ = stdout.flush();
                }
            }
        }
    }
}
