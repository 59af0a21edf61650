package com.acme.api;

import com.thoughtworks.xstream.XStream;
import org.junit.Test;

public class Gateway {

    private final XStream xstream = new XStream();

    public Object submit(String xml) {
        return relay(xml);
    }

    protected Object submitInternal(String xml) {
        return relay(xml);
    }

    @Test
    public void selfCheck() {
        relay("<ok/>");
    }

    private Object relay(String xml) {
        return decode(xml);
    }

    private Object decode(String xml) {
        return xstream.fromXML(xml);
    }
}
