fn main() {
    println!("ycl: suites not wired up yet");
}
